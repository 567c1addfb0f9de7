use super::{DeviceError, DeviceProfile};
use crate::dag::{TaskType, TaskTypeId};

const MEM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
struct CacheEntry {
    task_type: TaskTypeId,
    footprint_gb: f64,
}

/// Mutable per-device bookkeeping: running tasks by type, the LRU list of
/// resident task models and the departure flag.
///
/// A resident entry holds the task type's full memory requirement (data plus
/// model); free memory is whatever the entries leave over. Entries whose task
/// type has running reservations are pinned and never evicted.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    running: Vec<u32>,
    memory_total_gb: f64,
    cache: Vec<CacheEntry>,
    departed_at: Option<f64>,
}

impl DeviceState {
    pub fn new(profile: &DeviceProfile) -> Self {
        Self {
            running: vec![0; profile.n_types()],
            memory_total_gb: profile.memory_total_gb,
            cache: Vec::new(),
            departed_at: None,
        }
    }

    pub fn running(&self) -> &[u32] {
        &self.running
    }

    pub fn total_running(&self) -> u32 {
        self.running.iter().sum()
    }

    pub fn mem_free_gb(&self) -> f64 {
        self.memory_total_gb - self.cache.iter().map(|e| e.footprint_gb).sum::<f64>()
    }

    /// Resident task types, most recently used first.
    pub fn model_cache(&self) -> Vec<TaskTypeId> {
        self.cache.iter().map(|e| e.task_type).collect()
    }

    pub fn is_cached(&self, task: TaskTypeId) -> bool {
        self.cache.iter().any(|e| e.task_type == task)
    }

    pub fn departed_at(&self) -> Option<f64> {
        self.departed_at
    }

    pub fn is_alive(&self) -> bool {
        self.departed_at.is_none()
    }

    pub fn depart(&mut self, time: f64) {
        self.departed_at.get_or_insert(time);
    }

    pub fn reserve(&mut self, task: TaskTypeId) -> Result<(), DeviceError> {
        let slot = self
            .running
            .get_mut(task)
            .ok_or(DeviceError::UnknownTaskType(task))?;
        *slot += 1;
        Ok(())
    }

    pub fn release(&mut self, task: TaskTypeId) -> Result<(), DeviceError> {
        let slot = self
            .running
            .get_mut(task)
            .ok_or(DeviceError::UnknownTaskType(task))?;
        if *slot == 0 {
            return Err(DeviceError::UnderflowOnRelease(task));
        }
        *slot -= 1;
        Ok(())
    }

    fn pinned(&self, task: TaskTypeId) -> bool {
        self.running.get(task).is_some_and(|&k| k > 0)
    }

    /// Whether `task` could be made resident, evicting unpinned entries if
    /// needed.
    pub fn can_host(&self, task: &TaskType) -> bool {
        if self.is_cached(task.id) {
            return true;
        }
        let evictable: f64 = self
            .cache
            .iter()
            .filter(|e| !self.pinned(e.task_type))
            .map(|e| e.footprint_gb)
            .sum();
        self.mem_free_gb() + evictable + MEM_EPS >= task.mem_required_gb
    }

    /// Makes `task` resident and most recently used. Evicts unpinned entries
    /// from the back of the list until it fits and returns what was evicted.
    pub fn cache_model(
        &mut self,
        task: &TaskType,
        profile: &DeviceProfile,
    ) -> Result<Vec<TaskTypeId>, DeviceError> {
        if task.mem_required_gb > profile.memory_total_gb + MEM_EPS {
            return Err(DeviceError::ModelTooLarge {
                task: task.id,
                device: profile.id,
            });
        }
        if let Some(pos) = self.cache.iter().position(|e| e.task_type == task.id) {
            let entry = self.cache.remove(pos);
            self.cache.insert(0, entry);
            return Ok(Vec::new());
        }
        if !self.can_host(task) {
            return Err(DeviceError::InsufficientMemory {
                task: task.id,
                device: profile.id,
            });
        }
        let mut evicted = Vec::new();
        let mut pos = self.cache.len();
        while self.mem_free_gb() + MEM_EPS < task.mem_required_gb {
            pos -= 1;
            if !self.pinned(self.cache[pos].task_type) {
                evicted.push(self.cache.remove(pos).task_type);
            }
        }
        self.cache.insert(
            0,
            CacheEntry {
                task_type: task.id,
                footprint_gb: task.mem_required_gb,
            },
        );
        Ok(evicted)
    }
}
