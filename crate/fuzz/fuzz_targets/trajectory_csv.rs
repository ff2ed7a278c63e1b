#![no_main]

use libfuzzer_sys::fuzz_target;
use memkernel::io::read_trajectory_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(traj) = read_trajectory_csv(data) {
        assert_eq!(traj.q.len(), traj.grid.n_steps);
    }
});
