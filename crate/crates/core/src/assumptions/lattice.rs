use super::{AssumptionError, Result};
use crate::scalar::{log_space, Real};

/// Sample points `(x, p, m)` for sampling-based structural checks:
/// `p = |p|·ω` over magnitudes × unit directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleLattice<S> {
    x_points: Vec<[S; 2]>,
    p_magnitudes: Vec<S>,
    p_directions: Vec<[S; 2]>,
    m_values: Vec<S>,
}

const DECADES_REQUIRED: f64 = 6.0;

fn decades<S: Real>(v: &[S]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.as_f64()), hi.max(x.as_f64())));
    (hi / lo).log10()
}

fn directions<S: Real>(dim: usize, count: usize) -> Vec<[S; 2]> {
    if dim == 1 {
        return vec![[S::one(), S::zero()], [-S::one(), S::zero()]];
    }
    (0..count)
        .map(|k| {
            // offset keeps the directions off the axes
            let t = S::lit(2.0 * std::f64::consts::PI * (k as f64 + 0.25) / count as f64);
            [t.cos(), t.sin()]
        })
        .collect()
}

fn box_points<S: Real>(dim: usize) -> Vec<[S; 2]> {
    let ticks = [0.0, 0.5, 1.0];
    if dim == 1 {
        ticks.iter().map(|&t| [S::lit(t), S::zero()]).collect()
    } else {
        ticks
            .iter()
            .flat_map(|&a| ticks.iter().map(move |&b| [S::lit(a), S::lit(b)]))
            .collect()
    }
}

impl<S: Real> SampleLattice<S> {
    pub fn new(
        x_points: Vec<[S; 2]>,
        p_magnitudes: Vec<S>,
        p_directions: Vec<[S; 2]>,
        m_values: Vec<S>,
    ) -> Result<Self> {
        let bad = |m: &str| Err(AssumptionError::InvalidLattice(m.to_string()));
        if x_points.is_empty() || p_directions.is_empty() {
            return bad("lattice needs at least one x point and one direction");
        }
        if p_magnitudes.len() < 8 || m_values.len() < 8 {
            return bad("lattice needs at least 8 magnitudes and 8 densities");
        }
        if p_magnitudes.iter().chain(&m_values).any(|v| !(*v > S::zero() && v.is_finite())) {
            return bad("magnitudes and densities must be positive and finite");
        }
        if p_magnitudes.windows(2).any(|w| w[1] <= w[0]) || m_values.windows(2).any(|w| w[1] <= w[0]) {
            return bad("magnitudes and densities must be strictly increasing");
        }
        if decades(&p_magnitudes) < DECADES_REQUIRED - 1e-9 || decades(&m_values) < DECADES_REQUIRED - 1e-9 {
            return bad("magnitudes and densities must each cover at least 6 decades");
        }
        for d in &p_directions {
            if ((d[0] * d[0] + d[1] * d[1]).sqrt() - S::one()).abs() > S::lit(1e-6) {
                return bad("directions must be unit vectors");
            }
        }
        Ok(Self {
            x_points,
            p_magnitudes,
            p_directions,
            m_values,
        })
    }

    /// `|p|, m ∈ [1e-4, 1e4]` at four points per decade, 8 directions in
    /// the plane (±1 on the line), and a 3-point-per-axis grid on the unit box.
    pub fn default_for(dim: usize) -> Self {
        Self::with_density(dim, 4, 8)
    }

    fn with_density(dim: usize, per_decade: usize, dirs: usize) -> Self {
        let n = 8 * per_decade + 1;
        Self::new(
            box_points(dim),
            log_space(S::lit(1e-4), S::lit(1e4), n),
            directions(dim, dirs),
            log_space(S::lit(1e-4), S::lit(1e4), n),
        )
        .expect("built-in lattice is valid")
    }

    /// Twice the sample density in `|p|`, `m` and direction.
    pub fn refined(&self) -> Self {
        let densify = |v: &[S]| {
            let mut out = Vec::with_capacity(2 * v.len());
            for w in v.windows(2) {
                out.push(w[0]);
                out.push((w[0] * w[1]).sqrt());
            }
            out.push(*v.last().expect("non-empty"));
            out
        };
        let dirs = if self.p_directions.len() <= 2 && self.p_directions.iter().all(|d| d[1] == S::zero()) {
            self.p_directions.clone()
        } else {
            directions(2, 2 * self.p_directions.len())
        };
        Self {
            x_points: self.x_points.clone(),
            p_magnitudes: densify(&self.p_magnitudes),
            p_directions: dirs,
            m_values: densify(&self.m_values),
        }
    }

    pub fn with_x_points(mut self, x_points: Vec<[S; 2]>) -> Result<Self> {
        if x_points.is_empty() {
            return Err(AssumptionError::InvalidLattice("x points must be non-empty".into()));
        }
        self.x_points = x_points;
        Ok(self)
    }

    pub fn x_points(&self) -> &[[S; 2]] {
        &self.x_points
    }
    pub fn p_magnitudes(&self) -> &[S] {
        &self.p_magnitudes
    }
    pub fn p_directions(&self) -> &[[S; 2]] {
        &self.p_directions
    }
    pub fn m_values(&self) -> &[S] {
        &self.m_values
    }

    /// Total number of `(x, p, m)` samples.
    pub fn len(&self) -> usize {
        self.x_points.len() * self.p_magnitudes.len() * self.p_directions.len() * self.m_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
