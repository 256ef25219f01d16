use crate::dipole::DipoleParams;
use ecg_data::LeadId;

/// Start of the ST plateau: this many widths past the S-wave center.
pub const ST_START_FACTOR: f64 = 2.5;
/// End of the ST plateau: this many widths before the T-wave center.
pub const ST_END_FACTOR: f64 = 1.5;

/// Everything the generator knows how to inject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Pathology {
    Tachy,
    Brady,
    AxisDev,
    MiAnterior,
    MiAnterolateral,
    MiAnteroseptal,
    MiInferior,
    MiLateral,
    MiSeptal,
}

impl Pathology {
    pub const ALL: [Pathology; 9] = [
        Pathology::Tachy,
        Pathology::Brady,
        Pathology::AxisDev,
        Pathology::MiAnterior,
        Pathology::MiAnterolateral,
        Pathology::MiAnteroseptal,
        Pathology::MiInferior,
        Pathology::MiLateral,
        Pathology::MiSeptal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Pathology::Tachy => "TACHY",
            Pathology::Brady => "BRADY",
            Pathology::AxisDev => "AXIS_DEV",
            Pathology::MiAnterior => "MI_ANTERIOR",
            Pathology::MiAnterolateral => "MI_ANTEROLATERAL",
            Pathology::MiAnteroseptal => "MI_ANTEROSEPTAL",
            Pathology::MiInferior => "MI_INFERIOR",
            Pathology::MiLateral => "MI_LATERAL",
            Pathology::MiSeptal => "MI_SEPTAL",
        }
    }

    pub fn from_label(label: &str) -> Option<Pathology> {
        Pathology::ALL.iter().copied().find(|p| p.label() == label)
    }

    /// The measured leads an MI region's ST offset is injected into.
    /// Offsets on derived members of the conventional region sets (III,
    /// aVF, aVL) follow from the limb-lead identities: injecting II
    /// raises III and aVF by the same amount, injecting I raises aVL.
    pub fn st_measured_leads(self) -> &'static [LeadId] {
        use LeadId::*;
        match self {
            Pathology::MiAnterior => &[V3, V4],
            Pathology::MiAnteroseptal => &[V1, V2, V3, V4],
            Pathology::MiAnterolateral => &[I, V3, V4, V5, V6],
            Pathology::MiInferior => &[II],
            Pathology::MiLateral => &[I, V5, V6],
            Pathology::MiSeptal => &[V1, V2],
            _ => &[],
        }
    }

    /// The conventional full lead set of the region (for reporting and
    /// oracle checks), including derived members.
    pub fn st_region_leads(self) -> &'static [LeadId] {
        use LeadId::*;
        match self {
            Pathology::MiAnterior => &[V3, V4],
            Pathology::MiAnteroseptal => &[V1, V2, V3, V4],
            Pathology::MiAnterolateral => &[V3, V4, V5, V6, I, AVL],
            Pathology::MiInferior => &[II, III, AVF],
            Pathology::MiLateral => &[I, AVL, V5, V6],
            Pathology::MiSeptal => &[V1, V2],
            _ => &[],
        }
    }

    pub fn is_mi(self) -> bool {
        !self.st_measured_leads().is_empty()
    }
}

/// The ST plateau as a phase interval (start, end), derived from the
/// S and T wave parameters.
pub fn st_phase_window(params: &DipoleParams) -> (f64, f64) {
    let s = &params.waves[3];
    let t = &params.waves[4];
    (
        s.center + ST_START_FACTOR * s.width,
        t.center - ST_END_FACTOR * t.width,
    )
}
