use crate::error::{Error, Result};
use crate::model::Matrix;

/// Buffer of `l` packets sent over `n` slots on a `K`-state Markov channel.
#[derive(Debug, Clone)]
pub struct TransmissionMdp {
    pub channel: Matrix,
    /// Error probability per channel state, decreasing in the state.
    pub err: Vec<f64>,
    pub packets: usize,
    pub slots: usize,
    /// `[c(0), c(1)]`: cost of idling and of transmitting.
    pub action_cost: [f64; 2],
    /// Terminal penalty by number of packets left, `c_N(0) = 0`.
    pub terminal: Vec<f64>,
}

/// `values[n][i][s]` and `policy[n][i][s]` with `n` slots remaining.
#[derive(Debug, Clone)]
pub struct TransmissionSolution {
    pub values: Vec<Vec<Vec<f64>>>,
    pub policy: Vec<Vec<Vec<usize>>>,
}

pub fn build_transmission_scheduling(
    channel: Matrix,
    err: Vec<f64>,
    packets: usize,
    slots: usize,
    action_cost: [f64; 2],
    terminal: Vec<f64>,
) -> Result<TransmissionMdp> {
    let k = channel.rows();
    if channel.cols() != k || err.len() != k {
        return Err(Error::DimensionMismatch("channel matrix and error probabilities".into()));
    }
    if terminal.len() != packets + 1 {
        return Err(Error::DimensionMismatch(format!("terminal cost needs {} entries", packets + 1)));
    }
    if err.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::InvalidProbability("error probability outside [0,1]".into()));
    }
    let mut channel = channel;
    channel.make_stochastic(0)?;
    Ok(TransmissionMdp { channel, err, packets, slots, action_cost, terminal })
}

impl TransmissionMdp {
    pub fn num_channels(&self) -> usize {
        self.channel.rows()
    }

    pub fn solve(&self) -> TransmissionSolution {
        let k = self.num_channels();
        let l = self.packets;
        let mut values = vec![(0..=l).map(|i| vec![self.terminal[i]; k]).collect::<Vec<_>>()];
        let mut policy = vec![vec![vec![0; k]; l + 1]];
        for _ in 1..=self.slots {
            let prev = values.last().unwrap();
            let mut v = vec![vec![0.0; k]; l + 1];
            let mut mu = vec![vec![0; k]; l + 1];
            for i in 1..=l {
                for s in 0..k {
                    let mut q = [0.0; 2];
                    for (u, qu) in q.iter_mut().enumerate() {
                        let g = if u == 0 { 0.0 } else { 1.0 - self.err[s] };
                        let fut: f64 = (0..k)
                            .map(|t| self.channel[(s, t)] * (g * prev[i - 1][t] + (1.0 - g) * prev[i][t]))
                            .sum();
                        *qu = self.action_cost[u] + fut;
                    }
                    let u = usize::from(q[1] < q[0] - 1e-12);
                    v[i][s] = q[u];
                    mu[i][s] = u;
                }
            }
            values.push(v);
            policy.push(mu);
        }
        TransmissionSolution { values, policy }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_reliable_channel_always_transmits() {
        let m = build_transmission_scheduling(Matrix::identity(2), vec![0.0, 0.0], 3, 5, [0.0, 0.0], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let sol = m.solve();
        // Transmitting every slot is optimal; it is forced once slots equal packets.
        for n in 1..=5 {
            for i in 1..=3.min(n) {
                assert_eq!(sol.values[n][i], vec![0.0, 0.0]);
            }
        }
        for i in 1..=3 {
            assert_eq!(sol.policy[i][i], vec![1, 1]);
        }
        assert_eq!(sol.values[3][3], vec![0.0, 0.0]);
    }
}
