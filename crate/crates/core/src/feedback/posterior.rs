use super::{Dataset, ResponseDistribution, UserModel};
use crate::error::{Error, Result};

/// An ordered set of `k >= 2` distinct data-point indices shown to the user.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query(Vec<usize>);

impl Query {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.len() < 2 {
            return Err(Error::InvalidQuery(format!(
                "a query needs at least two points, got {}",
                indices.len()
            )));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidQuery(format!("index {} out of range 1..={n}", i + 1)));
        }
        for (a, &i) in indices.iter().enumerate() {
            if indices[..a].contains(&i) {
                return Err(Error::InvalidQuery(format!("index {} repeated", i + 1)));
            }
        }
        Ok(Query(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    /// Position of data point `i` within the query.
    pub fn position_of(&self, i: usize) -> Option<usize> {
        self.0.iter().position(|&q| q == i)
    }
}

/// Posterior probability of each data point being the target, with its
/// running cumulative sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    mass: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Posterior {
    pub fn uniform(n: usize) -> Self {
        Self::normalized(vec![1.0; n]).expect("uniform weights are valid")
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut w = vec![0.0; n];
        w[at] = 1.0;
        Self::normalized(w).expect("point mass is valid")
    }

    /// Normalizes nonnegative weights into a posterior.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        Self::normalized(weights)
    }

    fn normalized(mut mass: Vec<f64>) -> Result<Self> {
        let total: f64 = mass.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidDistribution(format!("total weight {total}")));
        }
        mass.iter_mut().for_each(|m| *m /= total);
        let cumulative = mass
            .iter()
            .scan(0.0, |acc, &m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        Ok(Posterior { mass, cumulative })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Indices with positive mass, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.mass.iter().enumerate().filter(|(_, &m)| m > 0.0).map(|(i, _)| i)
    }

    pub fn support_size(&self) -> usize {
        self.mass.iter().filter(|&&m| m > 0.0).count()
    }

    /// Total mass on the given indices.
    pub fn mass_of(&self, indices: impl IntoIterator<Item = usize>) -> f64 {
        indices.into_iter().map(|i| self.mass[i]).sum()
    }

    /// Entropy in bits.
    pub fn entropy(&self) -> f64 {
        super::entropy(&self.mass)
    }

    /// The quantile index `I(p)`: the smallest `i` with `c_i >= p`.
    pub fn quantile_index(&self, p: f64) -> Result<usize> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidLevel(p));
        }
        let i = self.cumulative.partition_point(|&c| c < p);
        if i < self.len() {
            Ok(i)
        } else {
            // Only reachable when rounding leaves c_n a hair below p = 1.
            Ok(self.mass.iter().rposition(|&m| m > 0.0).unwrap_or(self.len() - 1))
        }
    }

    /// Conditions on the target not being among the queried points.
    pub fn condition_on_miss(&self, query: &Query) -> Result<Posterior> {
        let mut mass = self.mass.clone();
        for q in query.iter() {
            mass[q] = 0.0;
        }
        if !mass.iter().any(|&m| m > 0.0) {
            return Err(Error::NoMassOutsideQuery);
        }
        Self::normalized(mass)
    }

    /// Bayes update after observing response position `response` (0-based)
    /// to `query`.
    ///
    /// A response means the search did not terminate, so queried points are
    /// zeroed first; the remaining mass is reweighted by `p_{i,r}` and
    /// renormalized by its exact sum.
    pub fn update(&self, data: &Dataset, model: &UserModel, query: &Query, response: usize) -> Result<Posterior> {
        let k = query.len();
        if response >= k {
            return Err(Error::InvalidResponse {
                response: response + 1,
                k,
            });
        }
        if !self
            .mass
            .iter()
            .enumerate()
            .any(|(i, &m)| m > 0.0 && !query.contains(i))
        {
            return Err(Error::NoMassOutsideQuery);
        }
        let mut dist = vec![0.0; k];
        let mut probs = vec![0.0; k];
        let mut mass = vec![0.0; self.len()];
        for (i, (&a, out)) in self.mass.iter().zip(mass.iter_mut()).enumerate() {
            if a <= 0.0 || query.contains(i) {
                continue;
            }
            for (d, q) in dist.iter_mut().zip(query.iter()) {
                *d = data.distance(i, q);
            }
            model.fill_probs(&dist, &mut probs);
            *out = a * probs[response];
        }
        if !mass.iter().any(|&m| m > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "response {} has zero probability under the model",
                response + 1
            )));
        }
        Self::normalized(mass)
    }
}

/// `A_r = sum_i a_i p_{i,r}`: the response distribution marginalized over the
/// posterior. Queried points must already carry zero mass.
pub fn marginal_response_probs(
    data: &Dataset,
    model: &UserModel,
    query: &Query,
    posterior: &Posterior,
) -> Result<ResponseDistribution> {
    let on_query = posterior.mass_of(query.iter());
    if on_query > 0.0 {
        return Err(Error::MassOnQueriedPoints { mass: on_query });
    }
    let k = query.len();
    let mut dist = vec![0.0; k];
    let mut probs = vec![0.0; k];
    let mut marginal = vec![0.0; k];
    for i in posterior.support() {
        for (d, q) in dist.iter_mut().zip(query.iter()) {
            *d = data.distance(i, q);
        }
        model.fill_probs(&dist, &mut probs);
        for (m, p) in marginal.iter_mut().zip(&probs) {
            *m += posterior.mass()[i] * p;
        }
    }
    let total: f64 = marginal.iter().sum();
    marginal.iter_mut().for_each(|m| *m /= total);
    Ok(ResponseDistribution::from_raw(marginal))
}
