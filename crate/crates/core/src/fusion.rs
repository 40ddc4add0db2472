//! Min-max normalization and Dempster-Shafer fusion over the frame {genuine, impostor}.

use crate::error::{Error, Result};

const MASS_TOLERANCE: f64 = 1e-9;
const CONFLICT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationStats {
    pub min_score: f64,
    pub max_score: f64,
}

impl NormalizationStats {
    pub fn new(min_score: f64, max_score: f64) -> Result<Self> {
        if !(min_score.is_finite() && max_score.is_finite()) || max_score <= min_score {
            return Err(Error::DegenerateRange(format!("[{min_score}, {max_score}]")));
        }
        Ok(Self { min_score, max_score })
    }
}

pub fn fit_minmax(scores: &[f64]) -> Result<NormalizationStats> {
    if scores.len() < 2 {
        return Err(Error::DegenerateRange(format!("{} score(s)", scores.len())));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    NormalizationStats::new(min, max)
}

/// `(score - min) / (max - min)`, clamped to `[0, 1]`.
pub fn normalize(score: f64, stats: &NormalizationStats) -> f64 {
    ((score - stats.min_score) / (stats.max_score - stats.min_score)).clamp(0.0, 1.0)
}

/// Subsets of the two-element frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subset {
    Empty,
    Genuine,
    Impostor,
    Theta,
}

impl Subset {
    pub const ALL: [Subset; 4] = [Subset::Empty, Subset::Genuine, Subset::Impostor, Subset::Theta];

    pub fn complement(self) -> Subset {
        match self {
            Subset::Empty => Subset::Theta,
            Subset::Genuine => Subset::Impostor,
            Subset::Impostor => Subset::Genuine,
            Subset::Theta => Subset::Empty,
        }
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(self, other: Subset) -> bool {
        matches!(
            (self, other),
            (Subset::Empty, _) | (_, Subset::Theta) | (Subset::Genuine, Subset::Genuine) | (Subset::Impostor, Subset::Impostor)
        )
    }

    pub fn intersects(self, other: Subset) -> bool {
        match (self, other) {
            (Subset::Empty, _) | (_, Subset::Empty) => false,
            (Subset::Theta, _) | (_, Subset::Theta) => true,
            (a, b) => a == b,
        }
    }

    pub fn cardinality(self) -> usize {
        match self {
            Subset::Empty => 0,
            Subset::Genuine | Subset::Impostor => 1,
            Subset::Theta => 2,
        }
    }
}

/// Basic probability assignment; the empty set carries no mass and is not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassFunction {
    pub m_genuine: f64,
    pub m_impostor: f64,
    pub m_theta: f64,
}

impl MassFunction {
    pub const VACUOUS: MassFunction = MassFunction {
        m_genuine: 0.0,
        m_impostor: 0.0,
        m_theta: 1.0,
    };

    pub fn new(m_genuine: f64, m_impostor: f64, m_theta: f64) -> Result<Self> {
        let m = Self {
            m_genuine,
            m_impostor,
            m_theta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.m_genuine, self.m_impostor, self.m_theta];
        if parts.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvariantViolation(format!("negative or non-finite mass {self:?}")));
        }
        let total: f64 = parts.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvariantViolation(format!("masses sum to {total}")));
        }
        Ok(())
    }

    pub fn mass(&self, set: Subset) -> f64 {
        match set {
            Subset::Empty => 0.0,
            Subset::Genuine => self.m_genuine,
            Subset::Impostor => self.m_impostor,
            Subset::Theta => self.m_theta,
        }
    }

    /// Conflict `K` against `other`: the mass both assign to disjoint singletons.
    pub fn conflict(&self, other: &MassFunction) -> f64 {
        self.m_genuine * other.m_impostor + self.m_impostor * other.m_genuine
    }
}

/// Discounted linear mass of a normalized distance: similarity `s = 1 - d` is committed
/// to {genuine} with weight `alpha`, its complement to {impostor}, and `1 - alpha` to the frame.
pub fn score_to_mass(normalized_distance: f64, alpha: f64) -> MassFunction {
    let s = 1.0 - normalized_distance.clamp(0.0, 1.0);
    MassFunction {
        m_genuine: alpha * s,
        m_impostor: alpha * (1.0 - s),
        m_theta: 1.0 - alpha,
    }
}

/// `Bel(A)`: total mass of the subsets of `A`.
pub fn belief(mass: &MassFunction, set: Subset) -> f64 {
    match set {
        Subset::Empty => 0.0,
        Subset::Genuine => mass.m_genuine,
        Subset::Impostor => mass.m_impostor,
        Subset::Theta => mass.m_genuine + mass.m_impostor + mass.m_theta,
    }
}

/// `Pl(A)`: total mass of the sets meeting `A`.
pub fn plausibility(mass: &MassFunction, set: Subset) -> f64 {
    match set {
        Subset::Empty => 0.0,
        Subset::Genuine => mass.m_genuine + mass.m_theta,
        Subset::Impostor => mass.m_impostor + mass.m_theta,
        Subset::Theta => mass.m_genuine + mass.m_impostor + mass.m_theta,
    }
}

/// Belief values on the four subsets of the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefFunction {
    pub empty: f64,
    pub genuine: f64,
    pub impostor: f64,
    pub theta: f64,
}

impl BeliefFunction {
    pub fn of(mass: &MassFunction) -> Self {
        Self {
            empty: belief(mass, Subset::Empty),
            genuine: belief(mass, Subset::Genuine),
            impostor: belief(mass, Subset::Impostor),
            theta: belief(mass, Subset::Theta),
        }
    }

    pub fn get(&self, set: Subset) -> f64 {
        match set {
            Subset::Empty => self.empty,
            Subset::Genuine => self.genuine,
            Subset::Impostor => self.impostor,
            Subset::Theta => self.theta,
        }
    }
}

/// Möbius inversion `m(A) = Σ_{B ⊆ A} (-1)^{|A - B|} Bel(B)`.
pub fn mass_from_belief(bel: &BeliefFunction) -> Result<MassFunction> {
    if bel.empty.abs() > MASS_TOLERANCE || (bel.theta - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidBelief(format!("Bel(Ø) = {}, Bel(Θ) = {}", bel.empty, bel.theta)));
    }
    let invert = |a: Subset| -> f64 {
        Subset::ALL
            .iter()
            .filter(|b| b.is_subset_of(a))
            .map(|&b| {
                let sign = if (a.cardinality() - b.cardinality()).is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * bel.get(b)
            })
            .sum()
    };
    let (g, i, t) = (invert(Subset::Genuine), invert(Subset::Impostor), invert(Subset::Theta));
    for (name, v) in [("genuine", g), ("impostor", i), ("theta", t)] {
        if v < -MASS_TOLERANCE {
            return Err(Error::InvalidBelief(format!("recovered m({name}) = {v}")));
        }
    }
    Ok(MassFunction {
        m_genuine: g.max(0.0),
        m_impostor: i.max(0.0),
        m_theta: t.max(0.0),
    })
}

/// Dempster's orthogonal sum `a ⊕ b`.
pub fn dempster_combine(a: &MassFunction, b: &MassFunction) -> Result<MassFunction> {
    let k = a.conflict(b);
    if (1.0 - k).abs() <= CONFLICT_TOLERANCE {
        return Err(Error::TotalConflict(k));
    }
    let norm = 1.0 - k;
    // cross terms grouped so that swapping the operands is bitwise exact
    Ok(MassFunction {
        m_genuine: (a.m_genuine * b.m_genuine + (a.m_genuine * b.m_theta + a.m_theta * b.m_genuine)) / norm,
        m_impostor: (a.m_impostor * b.m_impostor + (a.m_impostor * b.m_theta + a.m_theta * b.m_impostor)) / norm,
        m_theta: a.m_theta * b.m_theta / norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub alpha: f64,
    pub threshold_psi: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            threshold_psi: 0.5,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("fusion.alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.threshold_psi) {
            return Err(Error::Config(format!(
                "fusion.threshold_psi must lie in [0, 1], got {}",
                self.threshold_psi
            )));
        }
        Ok(())
    }
}

/// Combined mass of the two matchers, without the accept decision.
pub fn fuse(
    local_distance: f64,
    global_distance: f64,
    stats_local: &NormalizationStats,
    stats_global: &NormalizationStats,
    alpha: f64,
) -> Result<MassFunction> {
    let local = score_to_mass(normalize(local_distance, stats_local), alpha);
    let global = score_to_mass(normalize(global_distance, stats_global), alpha);
    dempster_combine(&local, &global)
}

/// Normalizes, converts, combines, and accepts when the fused genuine mass reaches `Ψ`.
pub fn fuse_and_decide(
    local_distance: f64,
    global_distance: f64,
    stats_local: &NormalizationStats,
    stats_global: &NormalizationStats,
    config: &FusionConfig,
) -> Result<(MassFunction, bool)> {
    let m = fuse(local_distance, global_distance, stats_local, stats_global, config.alpha)?;
    Ok((m, m.m_genuine >= config.threshold_psi))
}
