#include "qstruct/fft.hpp"

#include <fftw3.h>

#include <vector>

#include "qstruct/errors.hpp"

namespace qstruct {

struct Spectral2D::Impl {
    int n1 = 0, n2 = 0;
    fftw_plan row_fwd = nullptr, row_bwd = nullptr;
    fftw_plan col_fwd = nullptr, col_bwd = nullptr;

    ~Impl() {
        if (row_fwd) fftw_destroy_plan(row_fwd);
        if (row_bwd) fftw_destroy_plan(row_bwd);
        if (col_fwd) fftw_destroy_plan(col_fwd);
        if (col_bwd) fftw_destroy_plan(col_bwd);
    }
};

namespace {

fftw_plan plan_line(int n, int stride, int sign, fftw_complex* buf) {
    // FFTW_UNALIGNED so the plan can be re-executed on any std::vector data.
    return fftw_plan_many_dft(1, &n, 1, buf, nullptr, stride, 0, buf, nullptr, stride, 0, sign,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
}

inline fftw_complex* as_fftw(std::complex<double>* p) {
    return reinterpret_cast<fftw_complex*>(p);
}

}  // namespace

Spectral2D::Spectral2D(int n1, int n2) : impl_(std::make_unique<Impl>()) {
    if (n1 < 2 || n2 < 2) throw ValidationError("Spectral2D: grid too small");
    impl_->n1 = n1;
    impl_->n2 = n2;
    std::vector<std::complex<double>> scratch(static_cast<size_t>(n1) * n2);
    fftw_complex* buf = as_fftw(scratch.data());
    impl_->row_fwd = plan_line(n2, 1, FFTW_FORWARD, buf);
    impl_->row_bwd = plan_line(n2, 1, FFTW_BACKWARD, buf);
    impl_->col_fwd = plan_line(n1, n2, FFTW_FORWARD, buf);
    impl_->col_bwd = plan_line(n1, n2, FFTW_BACKWARD, buf);
}

Spectral2D::~Spectral2D() = default;

int Spectral2D::n1() const { return impl_->n1; }
int Spectral2D::n2() const { return impl_->n2; }

namespace {

void run_lines(fftw_plan plan, std::complex<double>* data, int count, long step, ExecMode mode) {
    if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < count; ++i)
            fftw_execute_dft(plan, as_fftw(data + i * step), as_fftw(data + i * step));
    } else {
        for (int i = 0; i < count; ++i)
            fftw_execute_dft(plan, as_fftw(data + i * step), as_fftw(data + i * step));
    }
}

}  // namespace

void Spectral2D::forward(std::complex<double>* data, ExecMode mode) const {
    run_lines(impl_->row_fwd, data, impl_->n1, impl_->n2, mode);
    run_lines(impl_->col_fwd, data, impl_->n2, 1, mode);
}

void Spectral2D::inverse(std::complex<double>* data, ExecMode mode) const {
    run_lines(impl_->row_bwd, data, impl_->n1, impl_->n2, mode);
    run_lines(impl_->col_bwd, data, impl_->n2, 1, mode);
    const double scale = 1.0 / (static_cast<double>(impl_->n1) * impl_->n2);
    const long total = static_cast<long>(impl_->n1) * impl_->n2;
    if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < total; ++i) data[i] *= scale;
    } else {
        for (long i = 0; i < total; ++i) data[i] *= scale;
    }
}

}  // namespace qstruct
