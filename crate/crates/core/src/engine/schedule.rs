//! Phase structure of one RK4 step.
//!
//! Each stage evaluates `F` once. Under 2SHOC a compute-D phase precedes it.
//! Every phase is split into an interior sub-phase and a boundary sub-phase
//! with a barrier between them, since the MSD condition reads values at the
//! inward neighbour that another tile may own.

use crate::integrator::Stage;
use crate::stencil::SchemeKind;

/// Global arrays touched by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldId {
    Psi,
    KTot,
    PsiTmp,
    PsiOut,
    /// Published stage derivative (pass-local in the serial schedule).
    KTmp,
    D,
    Potential,
}

/// Which points of a field an access covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Interior,
    Boundary,
    All,
}

impl Region {
    fn overlaps(self, other: Region) -> bool {
        self == Region::All || other == Region::All || self == other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    ComputeD,
    ComputeF,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubPhase {
    Interior,
    Boundary,
}

/// Array access performed by a sub-phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub field: FieldId,
    pub region: Region,
    /// True when a tile may read points owned by another tile.
    pub cross_tile: bool,
}

impl Access {
    fn cross(field: FieldId, region: Region) -> Self {
        Access { field, region, cross_tile: true }
    }
    fn local(field: FieldId, region: Region) -> Self {
        Access { field, region, cross_tile: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub kind: PhaseKind,
    pub stage: Stage,
    pub sub: SubPhase,
    pub reads: Vec<Access>,
    pub writes: Vec<(FieldId, Region)>,
}

/// Stencil input of each stage.
pub fn stage_input(stage: Stage) -> FieldId {
    match stage {
        Stage::First => FieldId::Psi,
        Stage::Second | Stage::Fourth => FieldId::PsiTmp,
        Stage::Third => FieldId::PsiOut,
    }
}

/// Array each stage writes its update into.
pub fn stage_output(stage: Stage) -> FieldId {
    match stage {
        Stage::First | Stage::Third => FieldId::PsiTmp,
        Stage::Second => FieldId::PsiOut,
        Stage::Fourth => FieldId::Psi,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSchedule {
    pub scheme: SchemeKind,
    pub phases: Vec<Phase>,
}

impl PhaseSchedule {
    pub fn new(scheme: SchemeKind) -> Self {
        use FieldId::*;
        use Region::{All, Boundary as Bnd, Interior as Int};
        let mut phases = Vec::new();
        for stage in Stage::ALL {
            let input = stage_input(stage);
            let output = stage_output(stage);
            if scheme == SchemeKind::Shoc2 {
                phases.push(Phase {
                    kind: PhaseKind::ComputeD,
                    stage,
                    sub: SubPhase::Interior,
                    reads: vec![Access::cross(input, All)],
                    writes: vec![(D, Int)],
                });
                phases.push(Phase {
                    kind: PhaseKind::ComputeD,
                    stage,
                    sub: SubPhase::Boundary,
                    reads: vec![
                        Access::local(input, Bnd),
                        Access::local(Potential, All),
                        Access::cross(input, Int),
                        Access::cross(D, Int),
                    ],
                    writes: vec![(D, Bnd)],
                });
            }
            let mut interior_reads = vec![
                Access::cross(input, All),
                Access::local(Psi, Int),
                Access::local(Potential, Int),
            ];
            if scheme == SchemeKind::Shoc2 {
                interior_reads.push(Access::cross(D, All));
            }
            let mut writes_int = vec![(KTmp, Int), (output, Int)];
            let mut writes_bnd = vec![(KTmp, Bnd), (output, Bnd)];
            if stage != Stage::Fourth {
                interior_reads.push(Access::local(KTot, Int));
                writes_int.push((KTot, Int));
                writes_bnd.push((KTot, Bnd));
            } else {
                interior_reads.push(Access::local(KTot, Int));
            }
            phases.push(Phase {
                kind: PhaseKind::ComputeF,
                stage,
                sub: SubPhase::Interior,
                reads: interior_reads,
                writes: writes_int,
            });
            phases.push(Phase {
                kind: PhaseKind::ComputeF,
                stage,
                sub: SubPhase::Boundary,
                reads: vec![
                    Access::local(input, Bnd),
                    Access::local(Psi, Bnd),
                    Access::local(KTot, Bnd),
                    Access::local(Potential, All),
                    Access::cross(input, Int),
                    Access::cross(KTmp, Int),
                ],
                writes: writes_bnd,
            });
        }
        PhaseSchedule { scheme, phases }
    }

    /// Number of compute-F and compute-D passes per step, counting a
    /// sub-phase pair as one pass.
    pub fn pass_counts(&self) -> (usize, usize) {
        let count = |kind| {
            self.phases.iter().filter(|p| p.kind == kind && p.sub == SubPhase::Interior).count()
        };
        (count(PhaseKind::ComputeF), count(PhaseKind::ComputeD))
    }

    /// Checks that no sub-phase writes a region that some tile may read from
    /// another tile during the same sub-phase, and that no region is written
    /// twice within a sub-phase.
    pub fn audit(&self) -> Result<(), String> {
        for (n, phase) in self.phases.iter().enumerate() {
            for (i, &(field, region)) in phase.writes.iter().enumerate() {
                if phase.writes[..i].iter().any(|&(f, r)| f == field && r.overlaps(region)) {
                    return Err(format!("phase {n}: {field:?} {region:?} written twice"));
                }
                if let Some(read) = phase
                    .reads
                    .iter()
                    .find(|r| r.cross_tile && r.field == field && r.region.overlaps(region))
                {
                    return Err(format!(
                        "phase {n} ({:?} {:?} {:?}): writes {field:?} {region:?} while reading {:?} across tiles",
                        phase.kind, phase.stage, phase.sub, read.region
                    ));
                }
            }
        }
        Ok(())
    }
}
