# How the delay changes the long-run behaviour.
#
# lambda = 0.1: the orbit barely notices tau. lambda = 401: the feedback is
# strong, and long delays give bursts whose spacing follows tau, not omega.
# CSV files land in $PERIODIC_DDE_OUT (default ./out).

from periodic_dde import delayed_exp_system, io
from periodic_dde.simulator import HistoryFn, measure_orbit, simulate, trajectories_merge

out = io.output_dir() / "delay_study"
history = HistoryFn.constant([0.02, 0.08], 10.0)
for lam in (0.1, 401.0):
    for tau in (0.1, 5.0, 10.0):
        run = simulate(delayed_exp_system(lam, tau), history, 60.0, 1e-3)
        m = measure_orbit(run, omega=1.0)
        io.write_csv(out / f"lam{lam:g}_tau{tau:g}.csv", run.times, run.states, downsample=20)
        amp = ", ".join(f"{a:.5f}" for a in m.amplitude)
        print(f"lambda={lam:<5g} tau={tau:<4g} amplitude ({amp})  period {m.period}")

# Two different histories end on the same orbit at lambda = 401
rep = trajectories_merge(delayed_exp_system(401.0, 0.1),
                         [HistoryFn.constant([1, 4], 0.1), HistoryFn.constant([3, 2], 0.1)], 40.0)
print(rep.merged, rep.merge_time, f"{rep.final_distance:.1e}")
