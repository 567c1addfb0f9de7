use super::{DeviceError, DeviceId, DeviceProfile, DeviceState};

/// Device profiles paired with their live state. Device ids are positions.
#[derive(Debug, Clone)]
pub struct Fleet {
    profiles: Vec<DeviceProfile>,
    states: Vec<DeviceState>,
}

impl Fleet {
    pub fn new(mut profiles: Vec<DeviceProfile>) -> Result<Self, DeviceError> {
        if profiles.is_empty() {
            return Err(DeviceError::InvalidProfile("fleet has no devices".into()));
        }
        let n_types = profiles[0].n_types();
        for (id, p) in profiles.iter_mut().enumerate() {
            p.id = id;
            p.check()?;
            if p.n_types() != n_types {
                return Err(DeviceError::InvalidProfile(format!(
                    "device {id} has {} task types, expected {n_types}",
                    p.n_types()
                )));
            }
        }
        let states = profiles.iter().map(DeviceState::new).collect();
        Ok(Self { profiles, states })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn n_types(&self) -> usize {
        self.profiles[0].n_types()
    }

    pub fn profiles(&self) -> &[DeviceProfile] {
        &self.profiles
    }

    pub fn profile(&self, id: DeviceId) -> &DeviceProfile {
        &self.profiles[id]
    }

    pub fn state(&self, id: DeviceId) -> &DeviceState {
        &self.states[id]
    }

    pub fn state_mut(&mut self, id: DeviceId) -> &mut DeviceState {
        &mut self.states[id]
    }

    pub fn device_mut(&mut self, id: DeviceId) -> (&DeviceProfile, &mut DeviceState) {
        (&self.profiles[id], &mut self.states[id])
    }

    pub fn alive(&self) -> impl Iterator<Item = DeviceId> + '_ {
        (0..self.len()).filter(|&d| self.states[d].is_alive())
    }

    /// Fresh state on every device: nothing running, nothing cached, all present.
    pub fn reset(&mut self) {
        for (state, profile) in self.states.iter_mut().zip(&self.profiles) {
            *state = DeviceState::new(profile);
        }
    }
}
