// Wall-clock comparison of the serial reference kernels against their OpenMP
// variants. The parallel paths compute identical per-element expressions, so
// besides timing, each section cross-checks the outputs.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "qstruct/bohm.hpp"
#include "qstruct/parallel.hpp"
#include "qstruct/sgdyn.hpp"
#include "qstruct/state.hpp"

using namespace qstruct;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_ms(F&& body, int reps = 1) {
    const double t0 = now_ms();
    for (int r = 0; r < reps; ++r) body();
    return (now_ms() - t0) / reps;
}

void report(const char* name, double serial_ms, double omp_ms, bool equal) {
    std::printf("%-34s %10.1f ms %10.1f ms   x%-5.2f %s\n", name, serial_ms, omp_ms,
                serial_ms / omp_ms, equal ? "outputs identical" : "OUTPUTS DIFFER");
}

double max_diff(const SpinorGridState& a, const SpinorGridState& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.amps.size(); ++i) m = std::max(m, std::abs(a.amps[i] - b.amps[i]));
    return m;
}

}  // namespace

int main() {
    apply_thread_cap_from_env();
    std::printf("qstruct kernel benchmark, %d OpenMP worker(s)\n", max_threads());
    std::printf("%-34s %13s %13s\n", "kernel", "serial", "openmp");

    const double r = 1.0 / std::numbers::sqrt2;

    // split-operator propagation, 256 x 128
    {
        SGConfig c;
        c.m_e = 1.0;
        c.m_p = 1836.0;
        c.mu = 1.0;
        c.b = 0.011;
        c.internal_omega = 0.0625;
        c.dt = 0.25;
        c.steps = 1;
        c.grid_cm = Grid1D(-16.0, 16.0, 256);
        c.grid_r = Grid1D(-20.0, 20.0, 128);
        const auto st0 = gaussian_spin_state({0.0, 0.0}, {0.5, 2.83}, {0.0, 0.0},
                                             {cdouble(r, 0.0), cdouble(r, 0.0)}, c.grid_cm,
                                             c.grid_r, "CM+R");
        const int steps = 200;
        SpinorGridState s_serial = st0, s_omp = st0;
        const double t_serial = time_ms([&] {
            for (int k = 0; k < steps; ++k) s_serial = step(s_serial, c, ExecMode::Serial);
        });
        const double t_omp = time_ms([&] {
            for (int k = 0; k < steps; ++k) s_omp = step(s_omp, c, ExecMode::OpenMP);
        });
        report("split-operator step x200", t_serial, t_omp, max_diff(s_serial, s_omp) == 0.0);
    }

    // structure refactorization (bicubic resample), 256^2 -> 256^2
    {
        const Grid1D g(-12.8, 12.8, 256);
        const auto st = gaussian_spin_state({0.0, 0.0}, {1.0, std::sqrt(2.0)}, {0.0, 0.0},
                                            {cdouble(1.0, 0.0), cdouble(0.0, 0.0)}, g, g, "e+p");
        const auto map = cm_relative_map(1.0, 1.0);
        const Grid1D t1(-10.0, 10.0, 256), t2(-14.0, 14.0, 256);
        SpinorGridState out_serial = st, out_omp = st;
        const double t_serial = time_ms(
            [&] { out_serial = change_structure(st, map, t1, t2, ExecMode::Serial); }, 5);
        const double t_omp = time_ms(
            [&] { out_omp = change_structure(st, map, t1, t2, ExecMode::OpenMP); }, 5);
        report("refactorization 256^2", t_serial, t_omp, max_diff(out_serial, out_omp) == 0.0);
    }

    // velocity frame construction, 512 x 128
    {
        const Grid1D g1(-16.0, 16.0, 512), g2(-7.0, 7.0, 128);
        const auto st = gaussian_spin_state({0.0, 0.0}, {0.5, 1.05}, {3.0, 0.0},
                                            {cdouble(r, 0.0), cdouble(r, 0.0)}, g1, g2, "CM+R");
        VelocityFrameBuilder builder(g1, g2, {1837.0, 1836.0 / 1837.0});
        VelocityFrame f_serial, f_omp;
        const double t_serial =
            time_ms([&] { f_serial = builder.build(st, 0.0, ExecMode::Serial); }, 10);
        const double t_omp = time_ms([&] { f_omp = builder.build(st, 0.0, ExecMode::OpenMP); }, 10);
        bool equal = true;
        for (size_t i = 0; i < f_serial.v1.size(); ++i)
            equal = equal && f_serial.v1[i] == f_omp.v1[i] && f_serial.v2[i] == f_omp.v2[i];
        report("velocity frame 512x128", t_serial, t_omp, equal);
    }

    // trajectory batch advance, 10^4 trajectories
    {
        const Grid1D g1(-16.0, 16.0, 256), g2(-7.0, 7.0, 128);
        const auto st = gaussian_spin_state({0.0, 0.0}, {1.0, 1.05}, {0.5, 0.0},
                                            {cdouble(1.0, 0.0), cdouble(0.0, 0.0)}, g1, g2, "e+p");
        const auto f0 = build_velocity_frame(st, 0.0, {1.0, 1.0});
        auto f1 = f0;
        f1.t = 0.2;

        auto advance = [&](ExecMode mode) {
            auto ens = sample_initial(st, 10000, 4242);
            ens.dt_traj = 0.05;
            for (int k = 0; k < 10; ++k) {
                auto a = f0, b = f1;
                a.t = 0.2 * k;
                b.t = 0.2 * (k + 1);
                advance_ensemble(ens, a, b, mode);
            }
            return ens;
        };
        TrajectoryEnsemble e_serial, e_omp;
        const double t_serial = time_ms([&] { e_serial = advance(ExecMode::Serial); });
        const double t_omp = time_ms([&] { e_omp = advance(ExecMode::OpenMP); });
        bool equal = true;
        for (int k = 0; k < e_serial.size(); ++k)
            equal = equal && e_serial.q1[k] == e_omp.q1[k] && e_serial.q2[k] == e_omp.q2[k];
        report("trajectory advance 1e4 x 40 steps", t_serial, t_omp, equal);
    }

    return 0;
}
