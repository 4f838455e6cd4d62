#include "glimmer/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "glimmer/error.hpp"

namespace glimmer::nn {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

template <std::size_t Block>
std::size_t accumulate_strip(double* y, std::size_t k0, std::size_t n, const double* a, std::size_t a_stride,
                             const double* b, std::size_t ldb, std::size_t rows) {
    for (; k0 + Block <= n; k0 += Block) {
        double acc[Block];
        for (std::size_t k = 0; k < Block; ++k) acc[k] = y[k0 + k];
        for (std::size_t r = 0; r < rows; ++r) {
            const double av = a[r * a_stride];
            const double* br = b + r * ldb + k0;
            for (std::size_t k = 0; k < Block; ++k) acc[k] += av * br[k];
        }
        for (std::size_t k = 0; k < Block; ++k) y[k0 + k] = acc[k];
    }
    return k0;
}

// y[k] += sum over r of a[r * a_stride] * b[r * ldb + k], added in ascending r for every k.
// Strips of y stay in registers across the row loop; the result does not depend on the strip width.
void accumulate_rows(double* y, std::size_t n, const double* a, std::size_t a_stride, const double* b,
                     std::size_t ldb, std::size_t rows) {
    std::size_t k0 = accumulate_strip<16>(y, 0, n, a, a_stride, b, ldb, rows);
    k0 = accumulate_strip<8>(y, k0, n, a, a_stride, b, ldb, rows);
    k0 = accumulate_strip<4>(y, k0, n, a, a_stride, b, ldb, rows);
    accumulate_strip<1>(y, k0, n, a, a_stride, b, ldb, rows);
}

}  // namespace

namespace kernel {

// Every output element accumulates its terms in a fixed order, independent of buffer alignment and
// thread count. Inner loops run along contiguous output columns so they vectorize without
// reassociating any sum.

void conv1d(std::span<const double> x, std::size_t steps, std::size_t channels, std::span<const double> w,
            std::size_t kernel, std::size_t filters, std::span<const double> b, std::span<double> out) {
    const std::size_t out_steps = steps - kernel + 1;
    const std::size_t patch = kernel * channels;
    for (std::size_t t = 0; t < out_steps; ++t) {
        double* o = out.data() + t * filters;
        std::fill(o, o + filters, 0.0);
        // The K x C receptive field of step t is contiguous in row-major x.
        accumulate_rows(o, filters, x.data() + t * channels, 1, w.data(), filters, patch);
        for (std::size_t f = 0; f < filters; ++f) o[f] += b[f];
    }
}

void conv1d_backward(std::span<const double> x, std::size_t steps, std::size_t channels,
                     std::span<const double> w, std::size_t kernel, std::size_t filters,
                     std::span<const double> dout, std::span<double> dx, std::span<double> dw,
                     std::span<double> db) {
    const std::size_t out_steps = steps - kernel + 1;
    const std::size_t patch = kernel * channels;
    for (std::size_t t = 0; t < out_steps; ++t) {
        const double* d = dout.data() + t * filters;
        for (std::size_t f = 0; f < filters; ++f) db[f] += d[f];
    }
    for (std::size_t i = 0; i < patch; ++i) {
        accumulate_rows(dw.data() + i * filters, filters, x.data() + i, channels, dout.data(), filters, out_steps);
    }
    if (dx.empty()) return;

    // Filter-major copy of w so the input gradient is a run of axpy updates along the patch.
    std::vector<double> wt(patch * filters);
    for (std::size_t i = 0; i < patch; ++i) {
        for (std::size_t f = 0; f < filters; ++f) wt[f * patch + i] = w[i * filters + f];
    }
    std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t t = 0; t < out_steps; ++t) {
        const double* d = dout.data() + t * filters;
        double* dxp = dx.data() + t * channels;
        accumulate_rows(dxp, patch, d, 1, wt.data(), patch, filters);
    }
}

void lstm(std::span<const double> x, std::size_t steps, std::size_t inputs, const LstmWeights& w,
          std::span<double> gates, std::span<double> cell, std::span<double> cell_tanh, std::span<double> hidden) {
    const std::size_t h = w.units;
    const std::size_t g4 = 4 * h;
    for (std::size_t t = 0; t < steps; ++t) {
        double* z = gates.data() + t * g4;
        std::fill(z, z + g4, 0.0);
        accumulate_rows(z, g4, x.data() + t * inputs, 1, w.input.data(), g4, inputs);
        if (t > 0) accumulate_rows(z, g4, hidden.data() + (t - 1) * h, 1, w.recurrent.data(), g4, h);
        for (std::size_t j = 0; j < g4; ++j) z[j] += w.bias[j];
        for (std::size_t k = 0; k < h; ++k) {
            const double i_gate = sigmoid(z[k]);
            const double f_gate = sigmoid(z[h + k]);
            const double g_gate = std::tanh(z[2 * h + k]);
            const double o_gate = sigmoid(z[3 * h + k]);
            z[k] = i_gate;
            z[h + k] = f_gate;
            z[2 * h + k] = g_gate;
            z[3 * h + k] = o_gate;
            const double c_prev = t > 0 ? cell[(t - 1) * h + k] : 0.0;
            const double c = f_gate * c_prev + i_gate * g_gate;
            const double ct = std::tanh(c);
            cell[t * h + k] = c;
            cell_tanh[t * h + k] = ct;
            hidden[t * h + k] = o_gate * ct;
        }
    }
}

void lstm_backward(std::span<const double> x, std::size_t steps, std::size_t inputs, const LstmWeights& w,
                   std::span<const double> gates, std::span<const double> cell, std::span<const double> cell_tanh,
                   std::span<const double> hidden, std::span<const double> dhidden, std::span<double> dx,
                   std::span<double> dw_input, std::span<double> dw_recurrent, std::span<double> dbias) {
    const std::size_t h = w.units;
    const std::size_t g4 = 4 * h;
    std::vector<double> dh_next(h, 0.0);
    std::vector<double> dc_next(h, 0.0);
    std::vector<double> dz(g4);

    for (std::size_t t = steps; t-- > 0;) {
        const double* gt = gates.data() + t * g4;
        for (std::size_t k = 0; k < h; ++k) {
            const double i_gate = gt[k];
            const double f_gate = gt[h + k];
            const double g_gate = gt[2 * h + k];
            const double o_gate = gt[3 * h + k];
            const double ct = cell_tanh[t * h + k];
            const double c_prev = t > 0 ? cell[(t - 1) * h + k] : 0.0;

            const double dh = dhidden[t * h + k] + dh_next[k];
            const double dc = dc_next[k] + dh * o_gate * (1.0 - ct * ct);
            dz[k] = dc * g_gate * i_gate * (1.0 - i_gate);
            dz[h + k] = dc * c_prev * f_gate * (1.0 - f_gate);
            dz[2 * h + k] = dc * i_gate * (1.0 - g_gate * g_gate);
            dz[3 * h + k] = dh * ct * o_gate * (1.0 - o_gate);
            dc_next[k] = dc * f_gate;
        }

        for (std::size_t j = 0; j < g4; ++j) dbias[j] += dz[j];
        const double* xt = x.data() + t * inputs;
        for (std::size_t f = 0; f < inputs; ++f) {
            const double xv = xt[f];
            double* dwr = dw_input.data() + f * g4;
            for (std::size_t j = 0; j < g4; ++j) dwr[j] += xv * dz[j];
        }
        if (t > 0) {
            const double* hp = hidden.data() + (t - 1) * h;
            for (std::size_t k = 0; k < h; ++k) {
                const double hv = hp[k];
                double* dur = dw_recurrent.data() + k * g4;
                for (std::size_t j = 0; j < g4; ++j) dur[j] += hv * dz[j];
            }
        }
        if (!dx.empty()) {
            double* dxt = dx.data() + t * inputs;
            for (std::size_t f = 0; f < inputs; ++f) {
                const double* wr = w.input.data() + f * g4;
                double acc = 0.0;
                for (std::size_t j = 0; j < g4; ++j) acc += wr[j] * dz[j];
                dxt[f] = acc;
            }
        }
        for (std::size_t k = 0; k < h; ++k) {
            const double* ur = w.recurrent.data() + k * g4;
            double acc = 0.0;
            for (std::size_t j = 0; j < g4; ++j) acc += ur[j] * dz[j];
            dh_next[k] = acc;
        }
    }
}

void dense(std::span<const double> in, std::span<const double> w, std::span<const double> b, std::span<double> out) {
    const std::size_t m = out.size();
    std::fill(out.begin(), out.end(), 0.0);
    accumulate_rows(out.data(), m, in.data(), 1, w.data(), m, in.size());
    for (std::size_t j = 0; j < m; ++j) out[j] += b[j];
}

void dense_backward(std::span<const double> in, std::span<const double> w, std::span<const double> dout,
                    std::span<double> din, std::span<double> dw, std::span<double> db) {
    const std::size_t m = dout.size();
    for (std::size_t j = 0; j < m; ++j) db[j] += dout[j];
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double v = in[i];
        double* dwr = dw.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) dwr[j] += v * dout[j];
    }
    if (din.empty()) return;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double* wr = w.data() + i * m;
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += wr[j] * dout[j];
        din[i] = acc;
    }
}

}  // namespace kernel

Matrix conv1d_forward(const Matrix& x, std::span<const double> w, std::size_t kernel, std::span<const double> b) {
    const std::size_t filters = b.size();
    if (kernel == 0 || filters == 0 || x.rows() < kernel || w.size() != kernel * x.cols() * filters) {
        throw ShapeError("conv1d: incompatible input, kernel or bias shape");
    }
    Matrix out(x.rows() - kernel + 1, filters);
    kernel::conv1d(x.data(), x.rows(), x.cols(), w, kernel, filters, b, out.data());
    return out;
}

Matrix lstm_forward(const Matrix& seq, const LstmWeights& w) {
    const std::size_t h = w.units;
    if (h == 0 || w.input.size() != seq.cols() * 4 * h || w.recurrent.size() != h * 4 * h ||
        w.bias.size() != 4 * h) {
        throw ShapeError("lstm: incompatible weight shapes");
    }
    const std::size_t steps = seq.rows();
    std::vector<double> gates(steps * 4 * h), cell(steps * h), cell_tanh(steps * h);
    Matrix hidden(steps, h);
    kernel::lstm(seq.data(), steps, seq.cols(), w, gates, cell, cell_tanh, hidden.data());
    return hidden;
}

}  // namespace glimmer::nn
