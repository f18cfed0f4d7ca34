//! Exact simulation of the Λ n-coalescent and extraction of its functionals.
//!
//! The partition is stored as a block-size array plus, per block, a bitmask
//! of the tracked labels it contains (at most 64 tracked labels). Everything
//! the simulator reports depends only on these two arrays. Optionally each
//! block also carries the number of labels it holds from a fixed prefix
//! `1..=split`, which lets one run observe two disjoint subsamples.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{domain, Error, Result};
use crate::rates::{total_rate_closed_form, MergerSizeLaw};
use crate::Measure;

/// Upper bound on n used when no explicit maximum is given.
pub const DEFAULT_MAX_N: usize = 5_000_000;

/// Largest number of tracked labels.
pub const MAX_TRACKED: usize = 64;

/// One merger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub b_before: u32,
    pub k: u32,
    /// Union of the tracked-label masks of the merged blocks.
    pub merged_tags: u64,
    /// Size of the block created by the merger.
    pub new_size: u32,
}

/// Current partition of `{1, ..., n}`.
#[derive(Debug, Clone)]
pub struct CoalescentState {
    time: f64,
    sizes: Vec<u32>,
    tags: Vec<u64>,
    split: Option<Vec<u32>>,
    max_size: u32,
    merged: Vec<u32>,
}

impl CoalescentState {
    /// All singletons at time zero. Labels `1..=tracked` are tracked;
    /// with `split = Some(m)`, labels `1..=m` form subsample A.
    pub fn new(n: usize, tracked: usize, split: Option<usize>) -> Result<Self> {
        if n < 2 {
            return domain(format!("sample size must be >= 2, got {n}"));
        }
        if tracked > MAX_TRACKED.min(n) {
            return domain(format!(
                "tracked labels must be <= min(n, {MAX_TRACKED}), got {tracked}"
            ));
        }
        let mut tags = vec![0_u64; n];
        for (i, t) in tags.iter_mut().take(tracked).enumerate() {
            *t = 1 << i;
        }
        let split = match split {
            None => None,
            Some(m) if m >= 1 && m < n => Some((0..n).map(|i| (i < m) as u32).collect()),
            Some(m) => return domain(format!("split point must lie in 1..n, got {m}")),
        };
        Ok(Self {
            time: 0.0,
            sizes: vec![1; n],
            tags,
            split,
            max_size: 1,
            merged: Vec::new(),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn block_sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn largest_block(&self) -> u32 {
        self.max_size
    }

    /// Sizes of the blocks merged by the most recent event.
    pub fn last_merged_sizes(&self) -> &[u32] {
        &self.merged
    }

    /// Index of the block holding tracked label `label` (1-based).
    pub fn block_of(&self, label: usize) -> Option<usize> {
        let bit = 1_u64 << (label - 1);
        self.tags.iter().position(|&t| t & bit != 0)
    }

    /// Index of the block containing individual 1, when label 1 is tracked.
    pub fn contains_one(&self) -> Option<usize> {
        self.block_of(1)
    }

    /// Least tracked label in each block, 0 where the block holds none.
    pub fn least_tracked(&self, block: usize) -> usize {
        let t = self.tags[block];
        if t == 0 {
            0
        } else {
            t.trailing_zeros() as usize + 1
        }
    }

    /// Whether tracked label `label` is still a singleton.
    pub fn is_singleton(&self, label: usize) -> bool {
        self.block_of(label)
            .is_some_and(|i| self.sizes[i] == 1 && self.least_tracked(i) == label)
    }

    /// Blocks meeting subsample A and subsample B.
    pub fn split_counts(&self) -> Option<(u32, u32)> {
        let a = self.split.as_ref()?;
        let mut ka = 0;
        let mut kb = 0;
        for (&s, &x) in self.sizes.iter().zip(a) {
            ka += (x > 0) as u32;
            kb += (s > x) as u32;
        }
        Some((ka, kb))
    }

    /// Merges `k` blocks chosen uniformly among all k-subsets (partial
    /// Fisher–Yates into the tail of the arrays).
    fn merge<R: Rng + ?Sized>(&mut self, k: usize, t: f64, rng: &mut R) -> Event {
        let b = self.sizes.len();
        debug_assert!(2 <= k && k <= b);
        for j in 0..k {
            let last = b - 1 - j;
            let r = rng.random_range(0..=last);
            self.sizes.swap(r, last);
            self.tags.swap(r, last);
            if let Some(a) = self.split.as_mut() {
                a.swap(r, last);
            }
        }
        let keep = b - k;
        self.merged.clear();
        self.merged.extend_from_slice(&self.sizes[keep..]);
        let size: u32 = self.merged.iter().sum();
        let tags = self.tags[keep..].iter().fold(0, |m, &t| m | t);
        self.sizes.truncate(keep);
        self.tags.truncate(keep);
        self.sizes.push(size);
        self.tags.push(tags);
        if let Some(a) = self.split.as_mut() {
            let sa: u32 = a[keep..].iter().sum();
            a.truncate(keep);
            a.push(sa);
        }
        self.max_size = self.max_size.max(size);
        self.time = t;
        Event {
            t,
            b_before: b as u32,
            k: k as u32,
            merged_tags: tags,
            new_size: size,
        }
    }
}

/// Total merger rates for every block count up to n, plus the merger-size law.
#[derive(Debug, Clone)]
pub struct Simulator {
    measure: Measure,
    n: usize,
    g: Vec<f64>,
    law: MergerSizeLaw,
}

impl Simulator {
    pub fn new(measure: &Measure, n: usize) -> Result<Self> {
        Self::with_max_n(measure, n, DEFAULT_MAX_N)
    }

    pub fn with_max_n(measure: &Measure, n: usize, max_n: usize) -> Result<Self> {
        if n > max_n {
            return Err(Error::Resource { n, max: max_n });
        }
        if n < 2 {
            return domain(format!("sample size must be >= 2, got {n}"));
        }
        let mut g = vec![0.0; n + 1];
        for (b, gb) in g.iter_mut().enumerate().skip(2) {
            *gb = total_rate_closed_form(measure, b as u64)?;
        }
        Ok(Self {
            measure: *measure,
            n,
            g,
            law: MergerSizeLaw::new(measure),
        })
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `g_b` for `2 <= b <= n`.
    pub fn total_rate(&self, b: usize) -> f64 {
        self.g[b]
    }

    pub fn merger_size_law(&self) -> &MergerSizeLaw {
        &self.law
    }

    fn draw_wait<R: Rng + ?Sized>(&self, b: usize, rng: &mut R) -> f64 {
        let e: f64 = rng.sample(Exp1);
        e / self.g[b]
    }

    fn apply<R: Rng + ?Sized>(&self, state: &mut CoalescentState, t: f64, rng: &mut R) -> Event {
        let b = state.blocks();
        let k = self.law.sample(b as u64, rng.random::<f64>()) as usize;
        state.merge(k, t, rng)
    }

    /// One transition: exponential holding time at rate `g_b`, then a merger.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut CoalescentState, rng: &mut R) -> Event {
        let b = state.blocks();
        assert!(b >= 2, "step called on an absorbed state");
        let t = state.time + self.draw_wait(b, rng);
        self.apply(state, t, rng)
    }

    /// Runs one replicate.
    pub fn simulate<R: Rng + ?Sized>(&self, req: &Request, rng: &mut R) -> Result<Replicate> {
        req.validate(self.n)?;
        let mut st = CoalescentState::new(self.n, req.tracked, req.split)?;
        let all = if req.tracked == 64 {
            u64::MAX
        } else {
            (1_u64 << req.tracked) - 1
        };
        let mut unresolved = all;
        let mut sample = FunctionalSample {
            t_ext: vec![f64::NAN; req.tracked],
            q: 0,
            y: 0,
            w_tilde: 0,
            k_probe: Vec::with_capacity(req.probes.len()),
            w_probe: Vec::with_capacity(req.probes.len()),
            tracked_size_probe: Vec::with_capacity(req.probes.len()),
            split_probe: Vec::new(),
        };
        let mut traj = req.record_trajectory.then(|| CoalescentTrajectory {
            n: self.n,
            events: Vec::new(),
            stopped_early: false,
            covered_until: f64::INFINITY,
            seed: None,
        });
        let mut next_probe = 0;
        loop {
            let b = st.blocks();
            let t_next = if b == 1 {
                f64::INFINITY
            } else {
                st.time + self.draw_wait(b, rng)
            };
            while next_probe < req.probes.len() && req.probes[next_probe] < t_next {
                sample.record_probe(&st, req.tracked);
                next_probe += 1;
            }
            if b == 1 {
                break;
            }
            if !req.run_to_mrca && unresolved == 0 && next_probe == req.probes.len() {
                if let Some(tr) = traj.as_mut() {
                    tr.stopped_early = true;
                    tr.covered_until = t_next;
                }
                break;
            }
            let ev = self.apply(&mut st, t_next, rng);
            let newly = ev.merged_tags & unresolved;
            if newly != 0 {
                let mut bits = newly;
                while bits != 0 {
                    let i = bits.trailing_zeros() as usize;
                    sample.t_ext[i] = ev.t;
                    bits &= bits - 1;
                }
                if newly & 1 != 0 {
                    sample.q = ev.k;
                    sample.y = ev.new_size;
                    sample.w_tilde = st.largest_block();
                    assert!(sample.q >= 2 && sample.y >= sample.q, "Q or Y invariant violated");
                }
                unresolved &= !newly;
            }
            if let Some(tr) = traj.as_mut() {
                tr.events.push(TrajectoryEvent {
                    t: ev.t,
                    b_before: ev.b_before,
                    k: ev.k,
                    merged_sizes: st.last_merged_sizes().to_vec(),
                    merged_contains: ev.merged_tags,
                });
            }
        }
        Ok(Replicate {
            sample,
            trajectory: traj,
        })
    }
}

/// What to extract from a replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    /// Labels `1..=tracked` whose external branch lengths are recorded.
    pub tracked: usize,
    /// Nondecreasing probe times (raw coalescent time).
    pub probes: Vec<f64>,
    /// Keep the event log.
    pub record_trajectory: bool,
    /// Continue to the MRCA even after every functional is known.
    pub run_to_mrca: bool,
    /// Label `m` ends subsample A; block counts of both subsamples are
    /// recorded at each probe.
    pub split: Option<usize>,
}

impl Default for Request {
    fn default() -> Self {
        Self {
            tracked: 1,
            probes: Vec::new(),
            record_trajectory: false,
            run_to_mrca: false,
            split: None,
        }
    }
}

impl Request {
    pub fn new(tracked: usize, probes: Vec<f64>) -> Self {
        Self {
            tracked,
            probes,
            ..Self::default()
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.tracked == 0 || self.tracked > MAX_TRACKED.min(n) {
            return domain(format!(
                "tracked labels must lie in 1..=min(n, {MAX_TRACKED}), got {}",
                self.tracked
            ));
        }
        if self.probes.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return domain("probe times must be finite and nonnegative");
        }
        if self.probes.windows(2).any(|w| w[1] < w[0]) {
            return domain("probe times must be sorted");
        }
        Ok(())
    }
}

/// Observables of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    /// External branch lengths `T_1, ..., T_k` (raw time).
    pub t_ext: Vec<f64>,
    /// Number of blocks in the merger that absorbs {1}.
    pub q: u32,
    /// Size of the block containing 1 right after `T_1`.
    pub y: u32,
    /// Largest block size at `T_1`.
    pub w_tilde: u32,
    /// Block count at each probe.
    pub k_probe: Vec<u32>,
    /// Largest block size at each probe.
    pub w_probe: Vec<u32>,
    /// Per probe, the size of the block holding each tracked label.
    pub tracked_size_probe: Vec<Vec<u32>>,
    /// Per probe, blocks meeting subsample A and subsample B.
    pub split_probe: Vec<(u32, u32)>,
}

impl FunctionalSample {
    fn record_probe(&mut self, st: &CoalescentState, tracked: usize) {
        self.k_probe.push(st.blocks() as u32);
        self.w_probe.push(st.largest_block());
        let mut sizes = vec![0; tracked];
        for (&s, &t) in st.sizes.iter().zip(&st.tags) {
            let mut bits = t;
            while bits != 0 {
                sizes[bits.trailing_zeros() as usize] = s;
                bits &= bits - 1;
            }
        }
        self.tracked_size_probe.push(sizes);
        if let Some(c) = st.split_counts() {
            self.split_probe.push(c);
        }
    }
}

/// One record of the event log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEvent {
    pub t: f64,
    pub b_before: u32,
    pub k: u32,
    pub merged_sizes: Vec<u32>,
    /// Tracked-label mask of the merged blocks.
    pub merged_contains: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoalescentTrajectory {
    pub n: usize,
    pub events: Vec<TrajectoryEvent>,
    /// The run halted before the MRCA.
    pub stopped_early: bool,
    /// Times at or beyond this are not described by the log.
    pub covered_until: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub sample: FunctionalSample,
    pub trajectory: Option<CoalescentTrajectory>,
}

/// `K^{(n)}(t)`, right-continuous.
pub fn block_count_at(traj: &CoalescentTrajectory, t: f64) -> Result<usize> {
    if !(t >= 0.0) {
        return domain(format!("time must be nonnegative, got {t}"));
    }
    if traj.stopped_early && t >= traj.covered_until {
        return Err(Error::OutOfRange {
            t,
            stopped_at: traj.covered_until,
        });
    }
    let done = traj.events.partition_point(|e| e.t <= t);
    let merged: usize = traj.events[..done].iter().map(|e| e.k as usize - 1).sum();
    Ok(traj.n - merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::stream;

    fn beta(a: f64) -> Measure {
        Measure::beta(a).unwrap()
    }

    #[test]
    fn two_blocks_single_event() {
        let sim = Simulator::new(&beta(1.5), 2).unwrap();
        let mut rng = stream(1, "unit", 0);
        let req = Request {
            tracked: 2,
            record_trajectory: true,
            ..Request::default()
        };
        let r = sim.simulate(&req, &mut rng).unwrap();
        let s = &r.sample;
        assert_eq!(s.t_ext[0], s.t_ext[1]);
        assert_eq!((s.q, s.y, s.w_tilde), (2, 2, 2));
        let tr = r.trajectory.unwrap();
        assert_eq!(tr.events.len(), 1);
        assert_eq!(block_count_at(&tr, 0.0).unwrap(), 2);
        assert!(!tr.stopped_early);
        assert_eq!(block_count_at(&tr, tr.events[0].t).unwrap(), 1);
    }

    #[test]
    fn kingman_always_binary() {
        let sim = Simulator::new(&Measure::kingman(), 50).unwrap();
        let mut rng = stream(2, "unit", 0);
        let mut st = CoalescentState::new(50, 1, None).unwrap();
        while st.blocks() > 1 {
            let ev = sim.step(&mut st, &mut rng);
            assert_eq!(ev.k, 2);
        }
        assert_eq!(st.block_sizes(), &[50]);
    }

    #[test]
    fn sizes_sum_to_n_and_counts_drop_by_k_minus_one() {
        let sim = Simulator::new(&beta(1.2), 300).unwrap();
        let mut rng = stream(3, "unit", 0);
        let mut st = CoalescentState::new(300, 3, Some(100)).unwrap();
        let mut last_t = 0.0;
        while st.blocks() > 1 {
            let b = st.blocks();
            let ev = sim.step(&mut st, &mut rng);
            assert_eq!(st.blocks(), b + 1 - ev.k as usize);
            assert_eq!(st.block_sizes().iter().sum::<u32>(), 300);
            assert!(ev.t > last_t);
            last_t = ev.t;
            let (ka, kb) = st.split_counts().unwrap();
            assert!(ka as usize <= st.blocks() && kb as usize <= st.blocks());
        }
        assert_eq!(st.split_counts(), Some((1, 1)));
    }

    #[test]
    fn singleton_tracking() {
        let st = CoalescentState::new(5, 2, None).unwrap();
        assert!(st.is_singleton(1) && st.is_singleton(2));
        assert_eq!(st.contains_one(), Some(0));
        assert_eq!(st.least_tracked(4), 0);
    }

    #[test]
    fn early_stop_bounds_the_trajectory() {
        let sim = Simulator::new(&beta(1.5), 1000).unwrap();
        let mut rng = stream(4, "unit", 0);
        let req = Request {
            record_trajectory: true,
            probes: vec![0.0, 1e-4],
            ..Request::default()
        };
        let r = sim.simulate(&req, &mut rng).unwrap();
        let tr = r.trajectory.unwrap();
        assert!(tr.stopped_early);
        assert_eq!(r.sample.k_probe[0], 1000);
        assert!(block_count_at(&tr, tr.covered_until * 2.0).is_err());
        let k = block_count_at(&tr, 1e-4).unwrap();
        assert_eq!(k as u32, r.sample.k_probe[1]);
    }

    #[test]
    fn probes_after_absorption_see_one_block() {
        let sim = Simulator::new(&beta(1.5), 20).unwrap();
        let mut rng = stream(5, "unit", 0);
        let r = sim.simulate(&Request::new(1, vec![1e6]), &mut rng).unwrap();
        assert_eq!(r.sample.k_probe, vec![1]);
        assert_eq!(r.sample.w_probe, vec![20]);
        assert_eq!(r.sample.tracked_size_probe, vec![vec![20]]);
    }

    #[test]
    fn resource_guard() {
        assert!(matches!(
            Simulator::with_max_n(&beta(1.5), 1001, 1000),
            Err(Error::Resource { n: 1001, max: 1000 })
        ));
    }

    #[test]
    fn request_validation() {
        let sim = Simulator::new(&beta(1.5), 10).unwrap();
        let mut rng = stream(6, "unit", 0);
        assert!(sim.simulate(&Request::new(0, vec![]), &mut rng).is_err());
        assert!(sim.simulate(&Request::new(11, vec![]), &mut rng).is_err());
        assert!(sim.simulate(&Request::new(1, vec![2.0, 1.0]), &mut rng).is_err());
        assert!(sim.simulate(&Request::new(1, vec![f64::NAN]), &mut rng).is_err());
    }
}
