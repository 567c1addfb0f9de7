use serde::{Deserialize, Serialize};

use super::{availability, DeviceError, DeviceState};
use crate::dag::TaskTypeId;

pub type DeviceId = usize;

/// Pairwise interference coefficients for one device.
///
/// `slope[i][j]` is the extra service time of a type-`i` task per co-located
/// running task of type `j`. `intercept[i][j]` is the profiled intercept of
/// that pair; only the diagonal feeds the default solo latency, the rest is
/// kept as calibration data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceMatrix {
    slope: Vec<Vec<f64>>,
    intercept: Vec<Vec<f64>>,
    solo: Vec<f64>,
}

impl InterferenceMatrix {
    pub fn new(slope: Vec<Vec<f64>>, intercept: Vec<Vec<f64>>) -> Result<Self, DeviceError> {
        let solo = (0..intercept.len())
            .map(|i| intercept[i].get(i).copied().unwrap_or(f64::NAN))
            .collect();
        Self::with_solo(slope, intercept, solo)
    }

    pub fn with_solo(
        slope: Vec<Vec<f64>>,
        intercept: Vec<Vec<f64>>,
        solo: Vec<f64>,
    ) -> Result<Self, DeviceError> {
        let n = slope.len();
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|row| row.len() == n);
        if n == 0 || !square(&slope) || !square(&intercept) || solo.len() != n {
            return Err(DeviceError::InvalidProfile(format!(
                "interference matrices must be non-empty, square and of equal size (got {n})"
            )));
        }
        if slope.iter().flatten().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(DeviceError::InvalidProfile("negative or non-finite slope".into()));
        }
        if intercept.iter().flatten().chain(&solo).any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(DeviceError::InvalidProfile(
                "intercepts and solo latencies must be positive".into(),
            ));
        }
        Ok(Self {
            slope,
            intercept,
            solo,
        })
    }

    pub fn n_types(&self) -> usize {
        self.solo.len()
    }

    pub fn slope(&self, task: TaskTypeId, other: TaskTypeId) -> f64 {
        self.slope[task][other]
    }

    pub fn intercept(&self, task: TaskTypeId, other: TaskTypeId) -> f64 {
        self.intercept[task][other]
    }

    pub fn solo(&self, task: TaskTypeId) -> f64 {
        self.solo[task]
    }

    /// Additive interference estimate: one solo term plus one slope
    /// contribution per co-located running task.
    pub fn estimate(&self, task: TaskTypeId, running: &[u32]) -> Result<f64, DeviceError> {
        if task >= self.n_types() {
            return Err(DeviceError::UnknownTaskType(task));
        }
        let row = &self.slope[task];
        let extra: f64 = row
            .iter()
            .zip(running)
            .map(|(m, &k)| m * f64::from(k))
            .sum();
        Ok(self.solo[task] + extra)
    }
}

/// Static capability of one edge device.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    pub id: DeviceId,
    pub class_name: String,
    pub cores: u32,
    pub memory_total_gb: f64,
    /// Departure rate per second.
    pub lambda: f64,
    pub interference: InterferenceMatrix,
    pub is_ped: bool,
}

impl DeviceProfile {
    pub fn check(&self) -> Result<(), DeviceError> {
        if self.cores == 0 || !(self.memory_total_gb > 0.0) || !(self.lambda >= 0.0) {
            return Err(DeviceError::InvalidProfile(format!(
                "device {} ({}) needs cores >= 1, memory > 0 and lambda >= 0",
                self.id, self.class_name
            )));
        }
        Ok(())
    }

    pub fn n_types(&self) -> usize {
        self.interference.n_types()
    }

    pub fn estimate_exec_latency(
        &self,
        state: &DeviceState,
        task: TaskTypeId,
    ) -> Result<f64, DeviceError> {
        self.interference.estimate(task, state.running())
    }

    pub fn availability_prob(&self, t: f64) -> Result<f64, DeviceError> {
        availability::availability_prob(self.lambda, t)
    }

    pub fn task_failure_prob(&self, duration: f64) -> Result<f64, DeviceError> {
        availability::task_failure_prob(self.lambda, duration)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub fn matrix(slope: Vec<Vec<f64>>, solo: Vec<f64>) -> InterferenceMatrix {
        let n = solo.len();
        let intercept = (0..n)
            .map(|i| (0..n).map(|j| if i == j { solo[i] } else { solo[i] * 1.1 }).collect())
            .collect();
        InterferenceMatrix::new(slope, intercept).unwrap()
    }

    #[test]
    fn empty_device_runs_at_solo_latency() {
        let m = matrix(vec![vec![0.5, 0.2], vec![0.1, 0.3]], vec![2.0, 3.0]);
        assert_eq!(m.estimate(0, &[0, 0]).unwrap(), 2.0);
        assert_eq!(m.estimate(1, &[0, 0]).unwrap(), 3.0);
    }

    #[test]
    fn single_type_matches_k_m_plus_c() {
        let m = matrix(vec![vec![0.5, 0.2], vec![0.1, 0.3]], vec![2.0, 3.0]);
        // k = 4 tasks of type 1 running, new task of type 0
        assert_eq!(m.estimate(0, &[0, 4]).unwrap(), 4.0 * 0.2 + 2.0);
    }

    #[test]
    fn mixed_load_is_sum_of_increments() {
        let m = matrix(vec![vec![0.5, 0.2], vec![0.1, 0.3]], vec![2.0, 3.0]);
        let both = m.estimate(1, &[2, 3]).unwrap();
        let only_first = m.estimate(1, &[2, 0]).unwrap();
        let only_second = m.estimate(1, &[0, 3]).unwrap();
        assert!((both - (only_first + only_second - 3.0)).abs() < 1e-12);
        assert!((both - (3.0 + 2.0 * 0.1 + 3.0 * 0.3)).abs() < 1e-12);
    }

    #[test]
    fn unknown_type() {
        let m = matrix(vec![vec![0.5]], vec![2.0]);
        assert_eq!(m.estimate(1, &[0]), Err(DeviceError::UnknownTaskType(1)));
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(InterferenceMatrix::new(vec![vec![-1.0]], vec![vec![1.0]]).is_err());
        assert!(InterferenceMatrix::new(vec![vec![1.0]], vec![vec![0.0]]).is_err());
        assert!(InterferenceMatrix::new(vec![vec![1.0, 1.0]], vec![vec![1.0]]).is_err());
    }

    proptest! {
        #[test]
        fn adding_load_never_speeds_up(
            slopes in proptest::collection::vec(0.0f64..2.0, 9),
            running in proptest::collection::vec(0u32..20, 3),
            extra in 0usize..3,
            task in 0usize..3,
        ) {
            let slope = slopes.chunks(3).map(|c| c.to_vec()).collect();
            let m = matrix(slope, vec![1.0, 2.0, 3.0]);
            let before = m.estimate(task, &running).unwrap();
            let mut more = running.clone();
            more[extra] += 1;
            prop_assert!(m.estimate(task, &more).unwrap() >= before);
        }
    }
}
