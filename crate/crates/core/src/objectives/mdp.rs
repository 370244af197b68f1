use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::field::ObjectiveField;
use super::norm::WeightedNorm;
use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;
const MAX_VI_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MdpKind {
    Discounted { alpha: f64 },
    /// Stochastic shortest path with an absorbing, cost-free terminal state.
    Ssp { terminal: usize },
}

/// A finite MDP with cost minimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    states: usize,
    actions: usize,
    /// `[s][a][s']`, row-major.
    transitions: Vec<f64>,
    /// `[s][a]`.
    costs: Vec<f64>,
    kind: MdpKind,
}

impl FiniteMdp {
    pub fn new(
        states: usize,
        actions: usize,
        transitions: Vec<f64>,
        costs: Vec<f64>,
        kind: MdpKind,
    ) -> Result<Self> {
        if states == 0 || actions == 0 {
            return Err(Error::InvalidMdp("need at least one state and one action".into()));
        }
        if transitions.len() != states * actions * states {
            return Err(Error::DimensionMismatch {
                expected: states * actions * states,
                got: transitions.len(),
            });
        }
        if costs.len() != states * actions {
            return Err(Error::DimensionMismatch { expected: states * actions, got: costs.len() });
        }
        let mdp = FiniteMdp { states, actions, transitions, costs, kind };
        mdp.validate()?;
        Ok(mdp)
    }

    fn validate(&self) -> Result<()> {
        for s in 0..self.states {
            for a in 0..self.actions {
                let row = self.row(s, a);
                if let Some(p) = row.iter().find(|p| !(p.is_finite() && (0.0..=1.0).contains(*p))) {
                    return Err(Error::InvalidMdp(format!("P[{s},{a},·] has entry {p}")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidMdp(format!("P[{s},{a},·] sums to {sum}")));
                }
                if !self.cost(s, a).is_finite() {
                    return Err(Error::InvalidMdp(format!("c[{s},{a}] is not finite")));
                }
            }
        }
        match self.kind {
            MdpKind::Discounted { alpha } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::InvalidMdp(format!("discount must be in (0,1), got {alpha}")));
                }
            }
            MdpKind::Ssp { terminal } => {
                if terminal >= self.states {
                    return Err(Error::InvalidMdp(format!("terminal state {terminal} out of range")));
                }
                for a in 0..self.actions {
                    if self.prob(terminal, a, terminal) != 1.0 || self.cost(terminal, a) != 0.0 {
                        return Err(Error::InvalidMdp(
                            "terminal state must be absorbing and cost-free".into(),
                        ));
                    }
                }
                self.check_termination_reachable(terminal)?;
            }
        }
        Ok(())
    }

    /// Every stationary policy reaches the terminal state from every state:
    /// grow the set of states from which, whatever action is taken, some
    /// successor in the support is already in the set.
    fn check_termination_reachable(&self, terminal: usize) -> Result<()> {
        let mut safe = vec![false; self.states];
        safe[terminal] = true;
        loop {
            let mut changed = false;
            for s in 0..self.states {
                if safe[s] {
                    continue;
                }
                let all_actions_progress = (0..self.actions).all(|a| {
                    self.row(s, a).iter().enumerate().any(|(t, &p)| p > 0.0 && safe[t])
                });
                if all_actions_progress {
                    safe[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        match safe.iter().position(|ok| !ok) {
            Some(s) => Err(Error::InvalidMdp(format!(
                "some stationary policy never terminates from state {s}"
            ))),
            None => Ok(()),
        }
    }

    /// Random discounted MDP: transition rows are normalised uniform draws,
    /// costs uniform on `[0, 1]`.
    pub fn random<R: Rng + ?Sized>(states: usize, actions: usize, alpha: f64, rng: &mut R) -> Result<Self> {
        let mut transitions = Vec::with_capacity(states * actions * states);
        for _ in 0..states * actions {
            let raw: Vec<f64> = (0..states).map(|_| rng.random_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut row: Vec<f64> = raw.iter().map(|p| p / total).collect();
            // push the rounding residue into the last entry so rows sum to 1
            let partial: f64 = row[..states - 1].iter().sum();
            row[states - 1] = 1.0 - partial;
            transitions.extend(row);
        }
        let costs = (0..states * actions).map(|_| rng.random_range(0.0..1.0)).collect();
        FiniteMdp::new(states, actions, transitions, costs, MdpKind::Discounted { alpha })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn kind(&self) -> MdpKind {
        self.kind
    }

    /// α for discounted problems, 1 for SSP.
    pub fn discount(&self) -> f64 {
        match self.kind {
            MdpKind::Discounted { alpha } => alpha,
            MdpKind::Ssp { .. } => 1.0,
        }
    }

    pub fn terminal(&self) -> Option<usize> {
        match self.kind {
            MdpKind::Ssp { terminal } => Some(terminal),
            MdpKind::Discounted { .. } => None,
        }
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transitions[(s * self.actions + a) * self.states + next]
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.actions + a) * self.states;
        &self.transitions[start..start + self.states]
    }

    pub fn cost(&self, s: usize, a: usize) -> f64 {
        self.costs[s * self.actions + a]
    }

    /// `c(s,a) + α Σ_{s'} P(s,a,s') J(s')`, with the terminal value pinned to 0 for SSP.
    pub fn q_value(&self, s: usize, a: usize, j: &[f64]) -> f64 {
        let terminal = self.terminal();
        let expected: f64 = self
            .row(s, a)
            .iter()
            .enumerate()
            .filter(|(t, _)| Some(*t) != terminal)
            .map(|(t, p)| p * j[t])
            .sum();
        self.cost(s, a) + self.discount() * expected
    }

    /// `(TJ)(s)`.
    pub fn bellman_component(&self, s: usize, j: &[f64]) -> f64 {
        if Some(s) == self.terminal() {
            return 0.0;
        }
        (0..self.actions).map(|a| self.q_value(s, a, j)).fold(f64::INFINITY, f64::min)
    }

    pub fn bellman_apply(&self, j: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(j)?;
        Ok((0..self.states).map(|s| self.bellman_component(s, j)).collect())
    }

    pub fn greedy_policy(&self, j: &[f64]) -> Vec<usize> {
        (0..self.states)
            .map(|s| {
                (0..self.actions)
                    .min_by(|&a, &b| self.q_value(s, a, j).total_cmp(&self.q_value(s, b, j)))
                    .unwrap_or(0)
            })
            .collect()
    }

    fn check_dim(&self, j: &[f64]) -> Result<()> {
        if j.len() != self.states {
            return Err(Error::DimensionMismatch { expected: self.states, got: j.len() });
        }
        Ok(())
    }

    /// A weighted max-norm under which `T` contracts, with its modulus.
    ///
    /// Discounted: unit weights, modulus α. SSP: weights are the maximal
    /// expected number of steps to termination `m(s)`, modulus
    /// `max_s (m(s) − 1) / m(s)`.
    pub fn contraction_norm(&self) -> Result<(WeightedNorm, f64)> {
        match self.kind {
            MdpKind::Discounted { alpha } => Ok((WeightedNorm::max_unit(), alpha)),
            MdpKind::Ssp { terminal } => {
                let steps = self.max_expected_steps(terminal)?;
                let modulus = steps
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| *s != terminal)
                    .map(|(_, m)| (m - 1.0) / m)
                    .fold(0.0, f64::max);
                let weights = steps
                    .iter()
                    .enumerate()
                    .map(|(s, m)| if s == terminal { 1.0 } else { *m })
                    .collect();
                Ok((WeightedNorm::weighted_max(weights), modulus))
            }
        }
    }

    fn max_expected_steps(&self, terminal: usize) -> Result<Vec<f64>> {
        let mut m = vec![0.0; self.states];
        for _ in 0..MAX_VI_ITERATIONS {
            let next: Vec<f64> = (0..self.states)
                .map(|s| {
                    if s == terminal {
                        return 0.0;
                    }
                    (0..self.actions)
                        .map(|a| {
                            1.0 + self
                                .row(s, a)
                                .iter()
                                .enumerate()
                                .filter(|(t, _)| *t != terminal)
                                .map(|(t, p)| p * m[t])
                                .sum::<f64>()
                        })
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            let delta = next.iter().zip(&m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            m = next;
            if delta <= 1e-12 * m.iter().cloned().fold(1.0, f64::max) {
                return Ok(m);
            }
        }
        Err(Error::NonConvergence { iterations: MAX_VI_ITERATIONS, residual: f64::NAN })
    }

    /// Synchronous value iteration to within `tol / 2` of `J*` in the
    /// contraction norm.
    pub fn exact_fixed_point(&self, tol: f64) -> Result<FixedPoint> {
        if !(tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
        }
        let (norm, modulus) = self.contraction_norm()?;
        let threshold = if modulus > 0.0 {
            tol * (1.0 - modulus) / (2.0 * modulus)
        } else {
            f64::INFINITY
        };
        let mut j = vec![0.0; self.states];
        for iteration in 1..=MAX_VI_ITERATIONS {
            let next = self.bellman_apply(&j)?;
            let step = norm.distance(&next, &j);
            j = next;
            if step <= threshold {
                let tj = self.bellman_apply(&j)?;
                let residual = norm.distance(&tj, &j);
                return Ok(FixedPoint { values: j, residual, iterations: iteration });
            }
        }
        let tj = self.bellman_apply(&j)?;
        Err(Error::NonConvergence { iterations: MAX_VI_ITERATIONS, residual: norm.distance(&tj, &j) })
    }

    /// Text fixture: a header line with `discounted <α>` or `ssp <terminal>`,
    /// `states <S>`, `actions <A>`, then `p s a s' prob` and `c s a cost`
    /// records. `#` starts a comment; omitted transitions are 0.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut states = None;
        let mut actions = None;
        let mut probs: Vec<(usize, usize, usize, f64)> = Vec::new();
        let mut costs: Vec<(usize, usize, f64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("line {}: cannot parse `{}`", lineno + 1, raw.trim()));
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
            match (fields[0], fields.len()) {
                ("discounted", 2) => kind = Some(MdpKind::Discounted { alpha: num(fields[1])? }),
                ("ssp", 2) => kind = Some(MdpKind::Ssp { terminal: idx(fields[1])? }),
                ("states", 2) => states = Some(idx(fields[1])?),
                ("actions", 2) => actions = Some(idx(fields[1])?),
                ("p", 5) => probs.push((idx(fields[1])?, idx(fields[2])?, idx(fields[3])?, num(fields[4])?)),
                ("c", 4) => costs.push((idx(fields[1])?, idx(fields[2])?, num(fields[3])?)),
                _ => return Err(bad()),
            }
        }
        let kind = kind.ok_or_else(|| Error::Parse("missing `discounted` or `ssp` header".into()))?;
        let states = states.ok_or_else(|| Error::Parse("missing `states`".into()))?;
        let actions = actions.ok_or_else(|| Error::Parse("missing `actions`".into()))?;
        let mut transitions = vec![0.0; states * actions * states];
        let mut cost_table = vec![f64::NAN; states * actions];
        for (s, a, t, p) in probs {
            if s >= states || a >= actions || t >= states {
                return Err(Error::Parse(format!("transition ({s},{a},{t}) out of range")));
            }
            transitions[(s * actions + a) * states + t] = p;
        }
        for (s, a, c) in costs {
            if s >= states || a >= actions {
                return Err(Error::Parse(format!("cost ({s},{a}) out of range")));
            }
            cost_table[s * actions + a] = c;
        }
        if let Some(k) = cost_table.iter().position(|c| c.is_nan()) {
            return Err(Error::Parse(format!("missing cost for ({},{})", k / actions, k % actions)));
        }
        FiniteMdp::new(states, actions, transitions, cost_table, kind)
    }

    pub fn to_fixture(&self) -> String {
        let mut out = String::new();
        match self.kind {
            MdpKind::Discounted { alpha } => writeln!(out, "discounted {alpha}").unwrap(),
            MdpKind::Ssp { terminal } => writeln!(out, "ssp {terminal}").unwrap(),
        }
        writeln!(out, "states {}", self.states).unwrap();
        writeln!(out, "actions {}", self.actions).unwrap();
        for s in 0..self.states {
            for a in 0..self.actions {
                for t in 0..self.states {
                    let p = self.prob(s, a, t);
                    if p != 0.0 {
                        writeln!(out, "p {s} {a} {t} {p}").unwrap();
                    }
                }
            }
        }
        for s in 0..self.states {
            for a in 0..self.actions {
                writeln!(out, "c {s} {a} {}", self.cost(s, a)).unwrap();
            }
        }
        out
    }
}

/// Result of [`FiniteMdp::exact_fixed_point`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub values: Vec<f64>,
    /// `‖TJ − J‖` in the contraction norm at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

/// Golden value files: one `<state> <value>` pair per line.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let mut entries = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(s), Some(v), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::Parse(format!("bad value line `{line}`")));
        };
        let s: usize = s.parse().map_err(|_| Error::Parse(format!("bad state `{s}`")))?;
        let v: f64 = v.parse().map_err(|_| Error::Parse(format!("bad value `{v}`")))?;
        entries.push((s, v));
    }
    entries.sort_by_key(|e| e.0);
    if entries.iter().enumerate().any(|(k, e)| e.0 != k) {
        return Err(Error::Parse("value file must list states 0..S exactly once".into()));
    }
    Ok(entries.into_iter().map(|e| e.1).collect())
}

pub fn format_values(values: &[f64]) -> String {
    values.iter().enumerate().map(|(s, v)| format!("{s} {v}\n")).collect()
}

/// `f(J) = TJ − J`; its unique zero is `J*`.
#[derive(Debug, Clone)]
pub struct BellmanResidualField {
    mdp: Arc<FiniteMdp>,
    norm: WeightedNorm,
    lipschitz: f64,
}

impl BellmanResidualField {
    pub fn new(mdp: Arc<FiniteMdp>) -> Result<Self> {
        let (norm, modulus) = mdp.contraction_norm()?;
        // Euclidean Lipschitz constant of T via the norm equivalence with ‖·‖_ν.
        let weights: Vec<f64> = (0..mdp.states()).map(|i| norm.weight(i)).collect();
        let min_w = weights.iter().cloned().fold(f64::INFINITY, f64::min);
        let w_norm = super::norm::euclidean(&weights);
        let lipschitz = modulus * w_norm / min_w + 1.0;
        Ok(BellmanResidualField { mdp, norm, lipschitz })
    }

    pub fn mdp(&self) -> &FiniteMdp {
        &self.mdp
    }

    /// The weighted max-norm the residual is reported in.
    pub fn norm(&self) -> &WeightedNorm {
        &self.norm
    }
}

impl ObjectiveField for BellmanResidualField {
    fn dim(&self) -> usize {
        self.mdp.states()
    }

    fn component(&self, i: usize, x: &[f64]) -> f64 {
        self.mdp.bellman_component(i, x) - x[i]
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `‖TJ − J‖_ν`.
    fn residual(&self, x: &[f64]) -> f64 {
        self.norm.eval_unchecked(&self.eval(x))
    }
}

pub fn bellman_residual_field(mdp: Arc<FiniteMdp>) -> Result<BellmanResidualField> {
    BellmanResidualField::new(mdp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_state(alpha: f64) -> FiniteMdp {
        FiniteMdp::new(1, 1, vec![1.0], vec![1.0], MdpKind::Discounted { alpha }).unwrap()
    }

    #[test]
    fn one_state_bellman_and_fixed_point() {
        let mdp = one_state(0.5);
        assert_eq!(mdp.bellman_apply(&[0.0]).unwrap(), vec![1.0]);
        let fp = mdp.exact_fixed_point(1e-10).unwrap();
        assert!((fp.values[0] - 2.0).abs() <= 1e-10);
        let f = bellman_residual_field(Arc::new(mdp)).unwrap();
        assert_eq!(f.eval(&[0.0]), vec![1.0]);
    }

    #[test]
    fn symmetric_two_state() {
        let mdp = FiniteMdp::new(
            2,
            1,
            vec![0.5, 0.5, 0.5, 0.5],
            vec![1.0, 1.0],
            MdpKind::Discounted { alpha: 0.5 },
        )
        .unwrap();
        let fp = mdp.exact_fixed_point(1e-10).unwrap();
        for v in fp.values {
            assert!((v - 2.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            one_state(0.5).bellman_apply(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn rejects_bad_rows_and_discount() {
        assert!(FiniteMdp::new(1, 1, vec![0.9], vec![1.0], MdpKind::Discounted { alpha: 0.5 }).is_err());
        assert!(FiniteMdp::new(1, 1, vec![1.0], vec![1.0], MdpKind::Discounted { alpha: 1.0 }).is_err());
        assert!(FiniteMdp::new(1, 1, vec![1.0], vec![f64::NAN], MdpKind::Discounted { alpha: 0.5 }).is_err());
    }

    #[test]
    fn ssp_rejects_trap_states() {
        // state 1 can loop forever under action 1
        let t = vec![
            0.0, 1.0, 0.0, /* s0 a0 */ 0.0, 0.0, 1.0, /* s0 a1 */
            0.0, 0.0, 1.0, /* s1 a0 */ 0.0, 1.0, 0.0, /* s1 a1 */
            0.0, 0.0, 1.0, 0.0, 0.0, 1.0,
        ];
        let c = vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0];
        let err = FiniteMdp::new(3, 2, t, c, MdpKind::Ssp { terminal: 2 }).unwrap_err();
        assert!(matches!(err, Error::InvalidMdp(_)));
    }

    #[test]
    fn ssp_chain_fixed_point() {
        // 0 -> 1 -> 2 (terminal), unit costs: J* = (2, 1, 0)
        let t = vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let mdp = FiniteMdp::new(3, 1, t, vec![1.0, 1.0, 0.0], MdpKind::Ssp { terminal: 2 }).unwrap();
        let fp = mdp.exact_fixed_point(1e-9).unwrap();
        assert_eq!(fp.values, vec![2.0, 1.0, 0.0]);
        let (norm, modulus) = mdp.contraction_norm().unwrap();
        assert_eq!(norm.weights(), &[2.0, 1.0, 1.0]);
        assert_eq!(modulus, 0.5);
    }

    #[test]
    fn fixture_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mdp = FiniteMdp::random(4, 3, 0.8, &mut rng).unwrap();
        let back = FiniteMdp::parse(&mdp.to_fixture()).unwrap();
        assert_eq!(mdp, back);
    }

    #[test]
    fn fixture_parse_errors() {
        assert!(matches!(FiniteMdp::parse("states 1\nactions 1\n"), Err(Error::Parse(_))));
        let missing_cost = "discounted 0.5\nstates 1\nactions 1\np 0 0 0 1\n";
        assert!(matches!(FiniteMdp::parse(missing_cost), Err(Error::Parse(_))));
        assert!(FiniteMdp::parse("discounted 0.5\nbogus\n").is_err());
    }

    #[test]
    fn values_round_trip() {
        let v = vec![1.5, -0.25, 3.0];
        assert_eq!(parse_values(&format_values(&v)).unwrap(), v);
    }
}
