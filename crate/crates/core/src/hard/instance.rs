use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::stream_rng;
use crate::mdp::{DeterministicPolicy, MdpModel, Policy};

/// Largest admissible gap parameter.
pub const MAX_EPS: f64 = 1.0 / 32.0;
/// Smallest admissible restart parameter.
pub const MIN_GAMMA_LB: f64 = 0.5;

/// Which arms of a first-level state are raised above the baseline `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// Arm `k` has `p′`; it is optimal.
    #[serde(rename = "i")]
    I,
    /// Arm `a_star` has `p*`, arm `k` has `p′`; `a_star` is optimal.
    #[serde(rename = "ii")]
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedState {
    pub case: Case,
    pub k: usize,
    /// Ignored under [`Case::I`].
    pub a_star: usize,
}

impl PlantedState {
    pub fn optimal_action(&self) -> usize {
        match self.case {
            Case::I => self.k,
            Case::II => self.a_star,
        }
    }
}

/// Parameters of a three-level lower-bound instance.
///
/// States are laid out as `X¹ = [0, N)`, then `X²` with `i²_(i,a)` at
/// `N + i·K + a`, then `X³` with `i³_(i,a)` at `N + NK + i·K + a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceSpec {
    pub n: usize,
    pub k: usize,
    pub gamma_lb: f64,
    pub eps: f64,
    pub planted: Vec<PlantedState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub optimal_action: Vec<usize>,
    pub optimal_gain: f64,
}

impl HardInstanceSpec {
    pub fn new(n: usize, k: usize, gamma_lb: f64, eps: f64, planted: Vec<PlantedState>) -> Result<Self> {
        let spec = HardInstanceSpec {
            n,
            k,
            gamma_lb,
            eps,
            planted,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Draws a case and planted arms independently for every first-level
    /// state. With `K = 1` only case (i) exists.
    pub fn random(n: usize, k: usize, gamma_lb: f64, eps: f64, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::validation("hard instance", "K must be positive"));
        }
        let planted = (0..n)
            .map(|i| {
                let mut rng = stream_rng(seed, i as u64);
                let case = if k >= 2 && rng.random::<bool>() { Case::II } else { Case::I };
                let kk = rng.random_range(0..k);
                let a_star = if case == Case::II {
                    let other = rng.random_range(0..k - 1);
                    if other >= kk { other + 1 } else { other }
                } else {
                    kk
                };
                PlantedState { case, k: kk, a_star }
            })
            .collect();
        Self::new(n, k, gamma_lb, eps, planted)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::validation("hard instance", "N and K must be positive"));
        }
        if !(self.gamma_lb >= MIN_GAMMA_LB && self.gamma_lb < 1.0) {
            return Err(Error::range("gamma_lb", self.gamma_lb, "[1/2, 1)"));
        }
        if !(self.eps > 0.0 && self.eps <= MAX_EPS) {
            return Err(Error::range("eps", self.eps, "(0, 1/32]"));
        }
        if self.planted.len() != self.n {
            return Err(Error::validation(
                "hard instance",
                format!("{} planted states for N = {}", self.planted.len(), self.n),
            ));
        }
        for (i, st) in self.planted.iter().enumerate() {
            if st.k >= self.k || (st.case == Case::II && st.a_star >= self.k) {
                return Err(Error::validation("hard instance", format!("state {i}: planted arm out of range")));
            }
            if st.case == Case::II && st.a_star == st.k {
                return Err(Error::validation("hard instance", format!("state {i}: case (ii) needs a_star != k")));
            }
        }
        Ok(())
    }

    pub fn p(&self) -> f64 {
        self.gamma_lb
    }

    pub fn p_prime(&self) -> f64 {
        self.gamma_lb + self.eps * (1.0 - self.gamma_lb)
    }

    pub fn p_star(&self) -> f64 {
        self.gamma_lb + 2.0 * self.eps * (1.0 - self.gamma_lb)
    }

    /// `p_(i,a)` for one arm.
    pub fn arm_p(&self, i: usize, a: usize) -> f64 {
        let st = &self.planted[i];
        match st.case {
            Case::II if a == st.a_star => self.p_star(),
            _ if a == st.k => self.p_prime(),
            _ => self.p(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.n + 2 * self.n * self.k
    }

    pub fn total_actions(&self) -> usize {
        3 * self.n * self.k
    }

    pub fn x2(&self, i: usize, a: usize) -> usize {
        self.n + i * self.k + a
    }

    pub fn x3(&self, i: usize, a: usize) -> usize {
        self.n + self.n * self.k + i * self.k + a
    }

    pub fn optimal_actions(&self) -> Vec<usize> {
        self.planted.iter().map(PlantedState::optimal_action).collect()
    }

    /// Full-model policy taking `first_level[i]` at each `i¹`.
    pub fn policy(&self, first_level: &[usize]) -> DeterministicPolicy {
        let mut actions = vec![0; self.num_states()];
        actions[..self.n].copy_from_slice(first_level);
        DeterministicPolicy::new(actions)
    }

    /// The instance description stored in model metadata.
    pub fn from_meta(model: &MdpModel) -> Result<Self> {
        let spec = model
            .meta()
            .and_then(|m| m.get("hard_instance"))
            .ok_or_else(|| Error::validation("model", "no hard-instance parameters in meta"))?;
        let spec: HardInstanceSpec = serde_json::from_value(spec.clone())
            .map_err(|e| Error::validation("model", format!("hard-instance meta: {e}")))?;
        spec.validate()?;
        if spec.num_states() != model.num_states() {
            return Err(Error::validation("model", "hard-instance meta does not match state count"));
        }
        Ok(spec)
    }
}

/// Builds the model and its planted optimum.
///
/// The reward for landing back on `i²` is folded into the `i²` action as its
/// expectation `γ_lb·p_(i,a)`, which leaves every gain `⟨ν, r^π⟩` unchanged.
pub fn build_hard_instance(spec: &HardInstanceSpec) -> Result<(MdpModel, GroundTruth)> {
    spec.validate()?;
    let (n, k, g) = (spec.n, spec.k, spec.gamma_lb);
    let s = spec.num_states();
    let restart = (1.0 - g) / n as f64;
    let restart_row = |self_idx: usize, stay: f64, exit: Option<(usize, f64)>| {
        let mut row = vec![0.0; s];
        row[..n].fill(restart);
        row[self_idx] += stay;
        if let Some((j, q)) = exit {
            row[j] += q;
        }
        row
    };

    let mut actions = vec![k; n];
    actions.resize(s, 1);
    let mut transitions = Vec::with_capacity(spec.total_actions());
    let mut rewards = Vec::with_capacity(spec.total_actions());
    for i in 0..n {
        for a in 0..k {
            let mut row = vec![0.0; s];
            row[spec.x2(i, a)] = 1.0;
            transitions.push(row);
            rewards.push(0.0);
        }
    }
    for i in 0..n {
        for a in 0..k {
            let p = spec.arm_p(i, a);
            transitions.push(restart_row(spec.x2(i, a), g * p, Some((spec.x3(i, a), g * (1.0 - p)))));
            rewards.push(g * p);
        }
    }
    for i in 0..n {
        for a in 0..k {
            transitions.push(restart_row(spec.x3(i, a), g, None));
            rewards.push(0.0);
        }
    }
    let meta = serde_json::json!({ "hard_instance": spec });
    let model = MdpModel::new(s, actions, transitions, rewards)?.with_meta(meta);
    let optimal_action = spec.optimal_actions();
    let optimal_gain = closed_form_gain(spec, &spec.policy(&optimal_action))?;
    Ok((
        model,
        GroundTruth {
            optimal_action,
            optimal_gain,
        },
    ))
}

/// First-level action weights of a full-model policy.
fn first_level_weights<P: Policy + ?Sized>(spec: &HardInstanceSpec, policy: &P) -> Result<Vec<Vec<f64>>> {
    if policy.num_states() != spec.num_states() {
        return Err(Error::validation(
            "policy",
            format!("covers {} states, instance has {}", policy.num_states(), spec.num_states()),
        ));
    }
    (0..spec.n)
        .map(|i| {
            let mut w = vec![0.0; spec.k];
            let mut bad = None;
            policy.for_each_action(i, &mut |a, p| match w.get_mut(a) {
                Some(slot) => *slot += p,
                None => bad = Some(a),
            });
            if let Some(a) = bad {
                return Err(Error::validation("policy", format!("state {i}: action {a} out of range")));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::validation("policy", format!("state {i}: weights sum to {total}")));
            }
            Ok(w)
        })
        .collect()
}

/// Stationary distribution of the policy's chain in product form:
/// `ν(i¹) = (1−γ)/(N(2−γ))`,
/// `ν(i²_a) = π_i(a)(1−γ)/(N(1−γp_a)(2−γ))`,
/// `ν(i³_a) = π_i(a)γ(1−p_a)/(N(1−γp_a)(2−γ))`, with `γ = γ_lb`.
/// Holds for randomized policies as well; unused arms get zero mass.
pub fn stationary_closed_form<P: Policy + ?Sized>(spec: &HardInstanceSpec, policy: &P) -> Result<Vec<f64>> {
    spec.validate()?;
    let weights = first_level_weights(spec, policy)?;
    let g = spec.gamma_lb;
    let n = spec.n as f64;
    let mut nu = vec![0.0; spec.num_states()];
    nu[..spec.n].fill((1.0 - g) / (n * (2.0 - g)));
    for (i, w) in weights.iter().enumerate() {
        for (a, &pi) in w.iter().enumerate() {
            let p = spec.arm_p(i, a);
            let denom = n * (1.0 - g * p) * (2.0 - g);
            nu[spec.x2(i, a)] = pi * (1.0 - g) / denom;
            nu[spec.x3(i, a)] = pi * g * (1.0 - p) / denom;
        }
    }
    Ok(nu)
}

/// Gain from the product-form stationary distribution.
pub fn closed_form_gain<P: Policy + ?Sized>(spec: &HardInstanceSpec, policy: &P) -> Result<f64> {
    let nu = stationary_closed_form(spec, policy)?;
    let g = spec.gamma_lb;
    let mut total = 0.0;
    for i in 0..spec.n {
        for a in 0..spec.k {
            total += nu[spec.x2(i, a)] * g * spec.arm_p(i, a);
        }
    }
    Ok(total)
}
