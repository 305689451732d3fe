//! Method-of-lines discretization, time stepping and the freezing method on square grids.

pub mod discretization;
pub mod frame;
pub mod freeze;
pub mod stepper;

pub use discretization::{assemble_discretization, expand, reaction_jacobian, Discretization, OperatorHandles};
pub use frame::{companion_e, extract_frame, reconstruct, FrameRecord};
pub use freeze::{freeze_run, frozen_residual, FreezeOptions, FreezeRun, FreezeSample, FreezeState};
pub use stepper::{drift_cfl_limit, simulate, vortex_seed, Scheme, StepperConfig};
