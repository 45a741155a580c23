//! Multi-user training, beam assignment and zero-forcing transmission.
//!
//! Every user is served on one beam. For an assignment `(n_1, …, n_U)` the
//! effective channel matrix has entries `√N_t · h̄_{u, n_v}`; ZF baseband
//! precoding then gives every user the same received SNR factor `λ²`, and the
//! system is in outage when `λ² <= ᾱ`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelRealization;

/// Relative singular-value floor below which an effective channel matrix is
/// treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Default limit on ordered tuples visited by exhaustive search.
pub const DEFAULT_EXHAUSTIVE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MuError {
    #[error("need 1 <= U <= N_RF (got U = {users}, N_RF = {n_rf})")]
    UserCount { users: usize, n_rf: usize },
    #[error("U = {users} exceeds N_t = {n_t}")]
    TooManyUsers { users: usize, n_t: usize },
    #[error("target per-user SNR must be positive and finite (got {0})")]
    AlphaBar(f64),
    #[error("transmit power must be positive and finite (got {0})")]
    Power(f64),
    #[error("realization has {got} users, configuration expects {expected}")]
    UserMismatch { got: usize, expected: usize },
    #[error("trained window {trained} outside [U = {users}, N_t = {n_t}]")]
    TrainedRange { trained: usize, users: usize, n_t: usize },
    #[error("exhaustive search over {tuples} tuples exceeds the cap of {cap}")]
    ExhaustiveCap { tuples: u64, cap: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentMethod {
    Exhaustive,
    Maxmin,
}

impl std::fmt::Display for AssignmentMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AssignmentMethod::Exhaustive => "exhaustive",
            AssignmentMethod::Maxmin => "maxmin",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuSystemConfig {
    pub n_rf: usize,
    pub users: usize,
    /// `ᾱ = (2^R_th − 1) · U / P`.
    pub alpha_bar: f64,
    pub power: Option<f64>,
    pub exhaustive_cap: u64,
}

impl MuSystemConfig {
    pub fn with_alpha_bar(n_rf: usize, users: usize, alpha_bar: f64) -> Result<Self, MuError> {
        if users == 0 || users > n_rf {
            return Err(MuError::UserCount { users, n_rf });
        }
        if !(alpha_bar > 0.0 && alpha_bar.is_finite()) {
            return Err(MuError::AlphaBar(alpha_bar));
        }
        Ok(MuSystemConfig {
            n_rf,
            users,
            alpha_bar,
            power: None,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
        })
    }

    pub fn from_rate(n_rf: usize, users: usize, power: f64, rate_th: f64) -> Result<Self, MuError> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(MuError::Power(power));
        }
        let alpha_bar = (rate_th.exp2() - 1.0) * users as f64 / power;
        let mut cfg = Self::with_alpha_bar(n_rf, users, alpha_bar)?;
        cfg.power = Some(power);
        Ok(cfg)
    }

    pub fn with_exhaustive_cap(mut self, cap: u64) -> Self {
        self.exhaustive_cap = cap;
        self
    }
}

/// Ordered user-to-beam map: entry `u` is the beam serving user `u`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BeamAssignment(pub Vec<usize>);

impl BeamAssignment {
    pub fn beams(&self) -> &[usize] {
        &self.0
    }

    pub fn has_duplicates(&self) -> bool {
        let mut b = self.0.clone();
        b.sort_unstable();
        b.windows(2).any(|w| w[0] == w[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuEpisodeResult {
    pub training_length: usize,
    pub outage: bool,
    /// Assignment used for transmission; `None` in outage.
    pub assignment: Option<BeamAssignment>,
    /// `λ²` of the last assignment attempted (0 if none was feasible).
    pub lambda_sq: f64,
    pub method: AssignmentMethod,
}

/// Non-zero beams each user has reported so far, and their union.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnownBeams {
    per_user: Vec<Vec<usize>>,
    union: Vec<usize>,
}

impl KnownBeams {
    pub fn new(users: usize) -> Self {
        KnownBeams {
            per_user: vec![Vec::new(); users],
            union: Vec::new(),
        }
    }

    /// Non-zero beams among the first `trained` beams of every user.
    pub fn after_training(ch: &ChannelRealization, trained: usize) -> Self {
        let mut known = KnownBeams::new(ch.num_users());
        for beam in 0..trained {
            known.train(ch, beam);
        }
        known
    }

    /// Records the feedback for one newly trained beam. Returns whether any
    /// user reported it as non-zero.
    pub fn train(&mut self, ch: &ChannelRealization, beam: usize) -> bool {
        let mut any = false;
        for (u, set) in self.per_user.iter_mut().enumerate() {
            if ch.user(u).is_nonzero(beam) {
                set.push(beam);
                any = true;
            }
        }
        if any {
            self.union.push(beam);
        }
        any
    }

    pub fn from_sets(per_user: Vec<Vec<usize>>) -> Self {
        let mut union: Vec<usize> = per_user.iter().flatten().copied().collect();
        union.sort_unstable();
        union.dedup();
        KnownBeams { per_user, union }
    }

    pub fn user(&self, u: usize) -> &[usize] {
        &self.per_user[u]
    }

    /// Sorted union of all users' known non-zero beams.
    pub fn union(&self) -> &[usize] {
        &self.union
    }

    /// Whether the BS may attempt an assignment: every user knows at least
    /// one non-zero beam and there are at least `U` distinct beams.
    pub fn ready(&self) -> bool {
        self.per_user.iter().all(|s| !s.is_empty()) && self.union.len() >= self.per_user.len()
    }
}

/// Effective channel matrix `Ĥ` with `Ĥ[u, v] = √N_t · h̄_{u, n_v}`.
pub fn effective_matrix(assignment: &BeamAssignment, ch: &ChannelRealization) -> DMatrix<Complex64> {
    let scale = (ch.n_t() as f64).sqrt();
    let beams = assignment.beams();
    DMatrix::from_fn(ch.num_users(), beams.len(), |u, v| ch.user(u).gain(beams[v]) * scale)
}

fn full_rank(h: &DMatrix<Complex64>) -> bool {
    if h.nrows() != h.ncols() || h.iter().all(|z| z.norm_sqr() == 0.0) {
        return false;
    }
    // A zero row is the common infeasible case; skip the decomposition.
    if h.row_iter().any(|r| r.iter().all(|z| z.norm_sqr() == 0.0)) {
        return false;
    }
    let sv = h.singular_values();
    let max = sv.max();
    let min = sv.min();
    max > 0.0 && min > RANK_TOLERANCE * max
}

/// Definition-level feasibility: `Ĥ` is square and numerically full rank.
pub fn check_feasible(assignment: &BeamAssignment, ch: &ChannelRealization) -> bool {
    assignment.beams().len() == ch.num_users()
        && assignment.beams().iter().all(|&b| b < ch.n_t())
        && full_rank(&effective_matrix(assignment, ch))
}

/// ZF precoder pieces for a feasible assignment: `W = Ĥ^H (Ĥ Ĥ^H)^{-1}`
/// and `λ = √(U / ‖W‖_F²)`, so `F_BB = λ W`.
pub fn zf_precoder(assignment: &BeamAssignment, ch: &ChannelRealization) -> Option<(DMatrix<Complex64>, f64)> {
    if !check_feasible(assignment, ch) {
        return None;
    }
    let h = effective_matrix(assignment, ch);
    let gram_inv = (&h * h.adjoint()).try_inverse()?;
    let w = h.adjoint() * gram_inv;
    // Analog DFT columns are orthonormal, so F_RF leaves the Frobenius norm unchanged.
    let lambda = (ch.num_users() as f64 / w.norm_squared()).sqrt();
    Some((w, lambda))
}

/// `λ²` for the assignment, or 0 when it is infeasible.
pub fn zf_lambda(assignment: &BeamAssignment, ch: &ChannelRealization) -> f64 {
    zf_precoder(assignment, ch).map_or(0.0, |(_, l)| l * l)
}

fn permutations_count(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((n - i) as u64))
}

/// Best-`λ²` assignment over all ordered `U`-tuples of distinct beams from
/// the known union. Ties keep the lexicographically smallest tuple.
pub fn exhaustive_assignment(
    known: &KnownBeams,
    ch: &ChannelRealization,
    cfg: &MuSystemConfig,
) -> Result<Option<(BeamAssignment, f64)>, MuError> {
    let users = ch.num_users();
    let pool = known.union();
    if pool.len() < users {
        return Ok(None);
    }
    let tuples = permutations_count(pool.len(), users);
    if tuples > cfg.exhaustive_cap {
        return Err(MuError::ExhaustiveCap {
            tuples,
            cap: cfg.exhaustive_cap,
        });
    }
    let mut best: Option<(BeamAssignment, f64)> = None;
    let mut current = Vec::with_capacity(users);
    let mut used = vec![false; pool.len()];
    search(pool, users, ch, &mut current, &mut used, &mut best);
    Ok(best)
}

fn search(
    pool: &[usize],
    users: usize,
    ch: &ChannelRealization,
    current: &mut Vec<usize>,
    used: &mut [bool],
    best: &mut Option<(BeamAssignment, f64)>,
) {
    let depth = current.len();
    if depth == users {
        let candidate = BeamAssignment(current.clone());
        let l2 = zf_lambda(&candidate, ch);
        if l2 > 0.0 && best.as_ref().is_none_or(|(_, b)| l2 > *b) {
            *best = Some((candidate, l2));
        }
        return;
    }
    for k in 0..pool.len() {
        if used[k] {
            continue;
        }
        used[k] = true;
        current.push(pool[k]);
        search(pool, users, ch, current, used, best);
        current.pop();
        used[k] = false;
    }
}

/// Kuhn's augmenting-path matching: can every user in `users` get a distinct
/// beam from `beams` using only edges allowed by `edge`?
fn has_perfect_matching(users: &[usize], beams: &[usize], edge: &dyn Fn(usize, usize) -> bool) -> bool {
    if users.len() > beams.len() {
        return false;
    }
    let mut owner: Vec<Option<usize>> = vec![None; beams.len()];
    for ui in 0..users.len() {
        let mut seen = vec![false; beams.len()];
        if !augment(ui, users, beams, edge, &mut owner, &mut seen) {
            return false;
        }
    }
    true
}

fn augment(
    ui: usize,
    users: &[usize],
    beams: &[usize],
    edge: &dyn Fn(usize, usize) -> bool,
    owner: &mut [Option<usize>],
    seen: &mut [bool],
) -> bool {
    for bi in 0..beams.len() {
        if seen[bi] || !edge(users[ui], beams[bi]) {
            continue;
        }
        seen[bi] = true;
        let free = match owner[bi] {
            None => true,
            Some(other) => augment(other, users, beams, edge, owner, seen),
        };
        if free {
            owner[bi] = Some(ui);
            return true;
        }
    }
    false
}

/// Lexicographic bottleneck assignment on beam-gain magnitudes.
///
/// Each stage finds the largest threshold `t` for which the remaining users
/// can be perfectly matched to remaining beams using gains `>= t` (binary
/// search over the distinct gains with a matching test), fixes the pair that
/// attains `t`, and repeats on what is left. Returns `None` if no perfect
/// matching on non-zero gains exists.
pub fn maxmin_assignment(known: &KnownBeams, ch: &ChannelRealization) -> Option<(BeamAssignment, f64)> {
    let gain = |u: usize, b: usize| ch.user(u).gain(b).norm();
    let mut users: Vec<usize> = (0..ch.num_users()).collect();
    let mut beams: Vec<usize> = known.union().to_vec();
    let mut assigned = vec![usize::MAX; users.len()];

    while !users.is_empty() {
        let mut levels: Vec<f64> = users
            .iter()
            .flat_map(|&u| beams.iter().map(move |&b| (u, b)))
            .map(|(u, b)| gain(u, b))
            .filter(|&g| g > 0.0)
            .collect();
        levels.sort_by(|a, b| a.partial_cmp(b).expect("gains are finite"));
        levels.dedup();
        let feasible_at = |t: f64| has_perfect_matching(&users, &beams, &|u, b| gain(u, b) >= t);
        if levels.is_empty() || !feasible_at(levels[0]) {
            return None;
        }
        // Largest index whose level still admits a perfect matching.
        let (mut lo, mut hi) = (0usize, levels.len() - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if feasible_at(levels[mid]) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let t = levels[lo];
        // Pick the first bottleneck edge whose removal leaves the rest matchable.
        let (u_star, b_star) = users
            .iter()
            .flat_map(|&u| beams.iter().map(move |&b| (u, b)))
            .filter(|&(u, b)| gain(u, b) == t)
            .find(|&(u, b)| {
                let rest_u: Vec<usize> = users.iter().copied().filter(|&x| x != u).collect();
                let rest_b: Vec<usize> = beams.iter().copied().filter(|&x| x != b).collect();
                has_perfect_matching(&rest_u, &rest_b, &|uu, bb| gain(uu, bb) >= t)
            })
            .expect("a matching at the bottleneck level uses some edge of that level");
        assigned[u_star] = b_star;
        users.retain(|&x| x != u_star);
        beams.retain(|&x| x != b_star);
    }
    let assignment = BeamAssignment(assigned);
    let l2 = zf_lambda(&assignment, ch);
    Some((assignment, l2))
}

fn assign(
    method: AssignmentMethod,
    known: &KnownBeams,
    ch: &ChannelRealization,
    cfg: &MuSystemConfig,
) -> Result<Option<(BeamAssignment, f64)>, MuError> {
    match method {
        AssignmentMethod::Exhaustive => exhaustive_assignment(known, ch, cfg),
        AssignmentMethod::Maxmin => Ok(maxmin_assignment(known, ch)),
    }
}

fn validate(ch: &ChannelRealization, cfg: &MuSystemConfig) -> Result<(), MuError> {
    if cfg.users == 0 || cfg.users > cfg.n_rf {
        return Err(MuError::UserCount {
            users: cfg.users,
            n_rf: cfg.n_rf,
        });
    }
    if ch.num_users() != cfg.users {
        return Err(MuError::UserMismatch {
            got: ch.num_users(),
            expected: cfg.users,
        });
    }
    if cfg.users > ch.n_t() {
        return Err(MuError::TooManyUsers {
            users: cfg.users,
            n_t: ch.n_t(),
        });
    }
    Ok(())
}

/// Outcome of one assignment attempt: `Some(result)` when transmission can start.
fn attempt(
    method: AssignmentMethod,
    known: &KnownBeams,
    ch: &ChannelRealization,
    cfg: &MuSystemConfig,
    trained: usize,
    last_lambda: &mut f64,
) -> Result<Option<MuEpisodeResult>, MuError> {
    let Some((assignment, l2)) = assign(method, known, ch, cfg)? else {
        *last_lambda = 0.0;
        return Ok(None);
    };
    *last_lambda = l2;
    if l2 > cfg.alpha_bar {
        return Ok(Some(MuEpisodeResult {
            training_length: trained,
            outage: false,
            assignment: Some(assignment),
            lambda_sq: l2,
            method,
        }));
    }
    Ok(None)
}

fn outage(trained: usize, lambda_sq: f64, method: AssignmentMethod) -> MuEpisodeResult {
    MuEpisodeResult {
        training_length: trained,
        outage: true,
        assignment: None,
        lambda_sq,
        method,
    }
}

/// Interleaved MU training: the first `U` beams are trained as a block, then
/// one beam per step. An assignment is attempted whenever the step brought
/// new non-zero feedback and every user knows a non-zero beam.
pub fn it_mu_episode(
    ch: &ChannelRealization,
    cfg: &MuSystemConfig,
    method: AssignmentMethod,
) -> Result<MuEpisodeResult, MuError> {
    validate(ch, cfg)?;
    let u = cfg.users;
    let mut known = KnownBeams::after_training(ch, u);
    let mut last = 0.0;
    if known.ready() {
        if let Some(done) = attempt(method, &known, ch, cfg, u, &mut last)? {
            return Ok(done);
        }
    }
    for beam in u..ch.n_t() {
        if !known.train(ch, beam) || !known.ready() {
            continue;
        }
        if let Some(done) = attempt(method, &known, ch, cfg, beam + 1, &mut last)? {
            return Ok(done);
        }
    }
    Ok(outage(ch.n_t(), last, method))
}

/// Non-interleaved MU transmission after training beams `0..trained`.
pub fn nit_mu_partial(
    ch: &ChannelRealization,
    cfg: &MuSystemConfig,
    trained: usize,
    method: AssignmentMethod,
) -> Result<MuEpisodeResult, MuError> {
    validate(ch, cfg)?;
    if trained < cfg.users || trained > ch.n_t() {
        return Err(MuError::TrainedRange {
            trained,
            users: cfg.users,
            n_t: ch.n_t(),
        });
    }
    let known = KnownBeams::after_training(ch, trained);
    let mut last = 0.0;
    if known.ready() {
        if let Some(done) = attempt(method, &known, ch, cfg, trained, &mut last)? {
            return Ok(done);
        }
    }
    Ok(outage(trained, last, method))
}

pub fn nit_mu_full(
    ch: &ChannelRealization,
    cfg: &MuSystemConfig,
    method: AssignmentMethod,
) -> Result<MuEpisodeResult, MuError> {
    nit_mu_partial(ch, cfg, ch.n_t(), method)
}
