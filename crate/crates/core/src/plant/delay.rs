use std::collections::VecDeque;

/// Pure time delay followed by a first-order lag, clocked at a fixed step.
///
/// The FIFO starts holding `depth` zeros. Each call pushes the new command and
/// pops the oldest one, so the popped value is the command from `depth` calls
/// ago. The lag is discretized exactly for a held input.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    buffer: VecDeque<f64>,
    depth: usize,
    lag_t: f64,
    dt: f64,
    output: f64,
}

impl DelayLine {
    pub fn new(delay: f64, lag_t: f64, dt: f64) -> Self {
        assert!(dt > 0.0, "delay line step must be positive");
        assert!(delay >= 0.0 && lag_t >= 0.0);
        let depth = (delay / dt).round() as usize;
        Self {
            buffer: std::iter::repeat_n(0.0, depth).collect(),
            depth,
            lag_t,
            dt,
            output: 0.0,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn lag(&self) -> f64 {
        self.lag_t
    }

    pub fn output(&self) -> f64 {
        self.output
    }

    /// Fill the line and the lag state with a constant, as if `value` had been
    /// commanded forever.
    pub fn prime(&mut self, value: f64) {
        self.buffer.iter_mut().for_each(|v| *v = value);
        self.output = value;
    }

    pub fn push_pop(&mut self, cmd: f64) -> f64 {
        self.buffer.push_back(cmd);
        let delayed = self.buffer.pop_front().unwrap_or(cmd);
        if self.lag_t > 0.0 {
            let k = 1.0 - (-self.dt / self.lag_t).exp();
            self.output += k * (delayed - self.output);
        } else {
            self.output = delayed;
        }
        self.output
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_delay_no_lag_is_passthrough() {
        let mut d = DelayLine::new(0.0, 0.0, 0.001);
        assert_eq!(d.depth(), 0);
        assert_eq!(d.push_pop(3.5), 3.5);
        assert_eq!(d.push_pop(-1.0), -1.0);
    }

    #[test]
    fn depth_is_rounded_ratio() {
        assert_eq!(DelayLine::new(0.1, 0.0, 0.025).depth(), 4);
        assert_eq!(DelayLine::new(0.1, 0.0, 0.001).depth(), 100);
        assert_eq!(DelayLine::new(0.05, 0.0, 0.001).depth(), 50);
    }

    #[test]
    fn step_leaves_zero_on_fourth_subsequent_pop() {
        let mut d = DelayLine::new(0.1, 0.0, 0.025);
        assert_eq!(d.push_pop(1.0), 0.0);
        for k in 1..4 {
            assert_eq!(d.push_pop(1.0), 0.0, "pop {k}");
        }
        assert_eq!(d.push_pop(1.0), 1.0);
    }
}
