use crate::error::{Error, Result};

/// Append-only record of the global iterate, one entry per tick, so that
/// agents can read stale components `x_{n-τ}(j)`.
///
/// In window mode only the last `window + 1` entries are guaranteed to be
/// available; older reads fail with [`Error::WindowExceeded`].
#[derive(Debug, Clone, PartialEq)]
pub struct IterateHistory {
    dim: usize,
    data: Vec<f64>,
    /// Clock of the first retained entry.
    first: u64,
    window: Option<usize>,
}

impl IterateHistory {
    pub fn new(x0: Vec<f64>) -> Result<Self> {
        if x0.is_empty() {
            return Err(Error::Config("iterate dimension must be positive".into()));
        }
        Ok(IterateHistory { dim: x0.len(), data: x0, first: 0, window: None })
    }

    pub fn with_window(x0: Vec<f64>, window: usize) -> Result<Self> {
        let mut h = IterateHistory::new(x0)?;
        h.window = Some(window);
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> Option<usize> {
        self.window
    }

    /// Current global clock `n` (index of the latest entry).
    pub fn clock(&self) -> u64 {
        self.first + (self.data.len() / self.dim) as u64 - 1
    }

    /// Number of ticks recorded so far, `n + 1`.
    pub fn len(&self) -> usize {
        self.clock() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn latest(&self) -> &[f64] {
        &self.data[self.data.len() - self.dim..]
    }

    pub fn get(&self, n: u64) -> Result<&[f64]> {
        let clock = self.clock();
        if n > clock {
            return Err(Error::Config(format!("tick {n} is in the future (clock {clock})")));
        }
        if n < self.first {
            return Err(Error::WindowExceeded { n: clock, tau: clock - n, window: self.window.unwrap_or(0) });
        }
        let k = (n - self.first) as usize * self.dim;
        Ok(&self.data[k..k + self.dim])
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        self.data.extend_from_slice(x);
        if let Some(w) = self.window {
            let retained = self.data.len() / self.dim;
            // amortised eviction: drop down to w + 1 entries once 2(w + 1) are held
            if retained >= 2 * (w + 1) {
                let drop = retained - (w + 1);
                self.data.drain(..drop * self.dim);
                self.first += drop as u64;
            }
        }
        Ok(())
    }

    /// `(x_{n-τ_0}(0), …, x_{n-τ_{d-1}}(d-1))` as seen by agent `agent`,
    /// with `delays[j] = τ_{j,agent}(n)`.
    pub fn delayed_view(&self, agent: usize, delays: &[u64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.delayed_view_into(agent, delays, &mut out)?;
        Ok(out)
    }

    pub fn delayed_view_into(&self, agent: usize, delays: &[u64], out: &mut [f64]) -> Result<()> {
        if delays.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: delays.len() });
        }
        let n = self.clock();
        if delays[agent] != 0 {
            return Err(Error::DelayOutOfRange { j: agent, i: agent, n, tau: delays[agent] as i64 });
        }
        for (j, &tau) in delays.iter().enumerate() {
            if tau > n {
                return Err(Error::DelayOutOfRange { j, i: agent, n, tau: tau as i64 });
            }
            if let Some(w) = self.window {
                if tau as usize > w && n - tau < self.first {
                    return Err(Error::WindowExceeded { n, tau, window: w });
                }
            }
            out[j] = self.get(n - tau)?[j];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history_to(n: u64) -> IterateHistory {
        let mut h = IterateHistory::new(vec![0.0, 0.0, 0.0]).unwrap();
        for k in 1..=n {
            let v = k as f64;
            h.push(&[v, 10.0 * v, 100.0 * v]).unwrap();
        }
        h
    }

    #[test]
    fn zero_delay_is_identity() {
        let h = history_to(5);
        assert_eq!(h.delayed_view(0, &[0, 0, 0]).unwrap(), h.latest().to_vec());
        assert_eq!(h.clock(), 5);
        assert_eq!(h.len(), 6);
    }

    #[test]
    fn reads_stale_component() {
        let h = history_to(5);
        // τ_{1,0}(5) = 3: component 1 from x_2, component 0 from x_5
        let v = h.delayed_view(0, &[0, 3, 0]).unwrap();
        assert_eq!(v, vec![5.0, 20.0, 500.0]);
    }

    #[test]
    fn out_of_range_delay_identifies_pair() {
        let h = history_to(5);
        assert_eq!(
            h.delayed_view(2, &[6, 0, 0]),
            Err(Error::DelayOutOfRange { j: 0, i: 2, n: 5, tau: 6 })
        );
        assert!(matches!(h.delayed_view(1, &[0, 1, 0]), Err(Error::DelayOutOfRange { j: 1, i: 1, .. })));
    }

    #[test]
    fn dimension_checked() {
        let mut h = history_to(1);
        assert!(h.push(&[1.0]).is_err());
        assert!(h.delayed_view(0, &[0, 0]).is_err());
    }

    #[test]
    fn window_mode_evicts_and_errors() {
        let mut h = IterateHistory::with_window(vec![0.0], 3).unwrap();
        for k in 1..=20 {
            h.push(&[k as f64]).unwrap();
        }
        assert_eq!(h.clock(), 20);
        // the last window + 1 entries are always available
        for tau in 0..=3 {
            assert_eq!(h.get(20 - tau).unwrap(), &[(20 - tau) as f64]);
        }
        assert!(matches!(h.get(0), Err(Error::WindowExceeded { .. })));
        assert!(h.delayed_view(0, &[0]).is_ok());
    }

    #[test]
    fn window_mode_rejects_old_reads() {
        let mut h = IterateHistory::with_window(vec![0.0, 0.0], 2).unwrap();
        for k in 1..=30 {
            h.push(&[k as f64, k as f64]).unwrap();
        }
        assert!(matches!(h.delayed_view(0, &[0, 25]), Err(Error::WindowExceeded { .. })));
    }
}
