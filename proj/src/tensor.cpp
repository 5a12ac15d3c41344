#include "murzim/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace murzim {

namespace {

[[noreturn]] void shape_fail(const std::string& op, const Tensor& a) {
    throw std::invalid_argument(op + ": bad shape (" + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + ")");
}

[[noreturn]] void shape_fail(const std::string& op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(op + ": shape mismatch (" + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + ") vs (" +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

Tape* same_tape(const Tensor& a, const Tensor& b) {
    if (a.tape() != b.tape() || a.tape() == nullptr)
        throw std::invalid_argument("operands belong to different tapes");
    return a.tape();
}

}  // namespace

std::size_t Tensor::rows() const { return tape_->node(id_).rows; }
std::size_t Tensor::cols() const { return tape_->node(id_).cols; }

double Tensor::value(std::size_t r, std::size_t c) const {
    return tape_->node(id_).val[r * cols() + c];
}

double Tensor::scalar() const {
    const auto& n = tape_->node(id_);
    if (n.rows != 1 || n.cols != 1)
        throw std::invalid_argument("scalar(): tensor is not 1x1");
    return n.val[0];
}

const std::vector<double>& Tensor::values() const { return tape_->node(id_).val; }
const std::vector<double>& Tensor::grad() const { return tape_->node(id_).grad; }

int Tape::emit(std::size_t rows, std::size_t cols, std::vector<double> vals,
               std::function<void()> back) {
    if (vals.size() != rows * cols)
        throw std::invalid_argument("emit: value count does not match shape");
    if (precision_ == Precision::Float32) {
        for (double& v : vals) v = static_cast<double>(static_cast<float>(v));
    }
    for (double v : vals) {
        if (!std::isfinite(v))
            throw std::runtime_error("non-finite value produced on tape");
    }
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.val = std::move(vals);
    n.grad.assign(rows * cols, 0.0);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::param(std::size_t rows, std::size_t cols, std::vector<double> vals) {
    return Tensor(this, emit(rows, cols, std::move(vals)));
}

Tensor Tape::constant(std::size_t rows, std::size_t cols, std::vector<double> vals) {
    return Tensor(this, emit(rows, cols, std::move(vals)));
}

Tensor Tape::zeros(std::size_t rows, std::size_t cols) {
    return Tensor(this, emit(rows, cols, std::vector<double>(rows * cols, 0.0)));
}

void Tape::zero_grad() {
    for (auto& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

void Tape::backward(Tensor loss) {
    if (loss.tape() != this)
        throw std::invalid_argument("backward: loss is not on this tape");
    Node& l = node(loss.id());
    if (l.rows != 1 || l.cols != 1)
        throw std::invalid_argument("backward: loss must be a 1x1 scalar");
    l.grad[0] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        if (nodes_[static_cast<std::size_t>(i)].back)
            nodes_[static_cast<std::size_t>(i)].back();
    }
}

Tensor matmul(Tensor a, Tensor b) {
    Tape* t = same_tape(a, b);
    if (a.cols() != b.rows()) shape_fail("matmul", a, b);
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    const int ia = a.id(), ib = b.id();
    std::vector<double> out(m * n, 0.0);
    {
        const auto& av = t->node(ia).val;
        const auto& bv = t->node(ib).val;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
                const double av_ip = av[i * k + p];
                if (av_ip == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j)
                    out[i * n + j] += av_ip * bv[p * n + j];
            }
    }
    int id = t->emit(m, n, std::move(out), nullptr);
    t->node(id).back = [t, id, ia, ib, m, k, n]() {
        const auto& g = t->node(id).grad;
        const auto& av = t->node(ia).val;
        const auto& bv = t->node(ib).val;
        auto& ga = t->node(ia).grad;
        auto& gb = t->node(ib).grad;
        // dA = dC * B^T, dB = A^T * dC
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    acc += g[i * n + j] * bv[p * n + j];
                ga[i * k + p] += acc;
            }
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < m; ++i)
                    acc += av[i * k + p] * g[i * n + j];
                gb[p * n + j] += acc;
            }
    };
    return Tensor(t, id);
}

Tensor transpose(Tensor a) {
    Tape* t = a.tape();
    const std::size_t m = a.rows(), n = a.cols();
    const int ia = a.id();
    std::vector<double> out(m * n);
    const auto& av = t->node(ia).val;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[j * m + i] = av[i * n + j];
    int id = t->emit(n, m, std::move(out), nullptr);
    t->node(id).back = [t, id, ia, m, n]() {
        const auto& g = t->node(id).grad;
        auto& ga = t->node(ia).grad;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                ga[i * n + j] += g[j * m + i];
    };
    return Tensor(t, id);
}

Tensor concat_cols(Tensor a, Tensor b) {
    Tape* t = same_tape(a, b);
    if (a.rows() != b.rows()) shape_fail("concat_cols", a, b);
    const std::size_t m = a.rows(), ca = a.cols(), cb = b.cols();
    const int ia = a.id(), ib = b.id();
    std::vector<double> out(m * (ca + cb));
    const auto& av = t->node(ia).val;
    const auto& bv = t->node(ib).val;
    for (std::size_t i = 0; i < m; ++i) {
        std::copy(av.begin() + static_cast<long>(i * ca),
                  av.begin() + static_cast<long>((i + 1) * ca),
                  out.begin() + static_cast<long>(i * (ca + cb)));
        std::copy(bv.begin() + static_cast<long>(i * cb),
                  bv.begin() + static_cast<long>((i + 1) * cb),
                  out.begin() + static_cast<long>(i * (ca + cb) + ca));
    }
    int id = t->emit(m, ca + cb, std::move(out), nullptr);
    t->node(id).back = [t, id, ia, ib, m, ca, cb]() {
        const auto& g = t->node(id).grad;
        auto& ga = t->node(ia).grad;
        auto& gb = t->node(ib).grad;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] += g[i * (ca + cb) + j];
            for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] += g[i * (ca + cb) + ca + j];
        }
    };
    return Tensor(t, id);
}

namespace {

template <typename Fwd, typename Bwd>
Tensor elementwise_binary(const char* name, Tensor a, Tensor b, Fwd fwd, Bwd bwd) {
    Tape* t = same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail(name, a, b);
    const std::size_t sz = a.size();
    const int ia = a.id(), ib = b.id();
    std::vector<double> out(sz);
    const auto& av = t->node(ia).val;
    const auto& bv = t->node(ib).val;
    for (std::size_t i = 0; i < sz; ++i) out[i] = fwd(av[i], bv[i]);
    int id = t->emit(a.rows(), a.cols(), std::move(out), nullptr);
    t->node(id).back = [t, id, ia, ib, sz, bwd]() {
        const auto& g = t->node(id).grad;
        const auto& av = t->node(ia).val;
        const auto& bv = t->node(ib).val;
        auto& ga = t->node(ia).grad;
        auto& gb = t->node(ib).grad;
        for (std::size_t i = 0; i < sz; ++i) {
            auto [da, db] = bwd(av[i], bv[i]);
            ga[i] += g[i] * da;
            gb[i] += g[i] * db;
        }
    };
    return Tensor(t, id);
}

template <typename Fwd, typename Bwd>
Tensor elementwise_unary(Tensor a, Fwd fwd, Bwd bwd) {
    Tape* t = a.tape();
    const std::size_t sz = a.size();
    const int ia = a.id();
    std::vector<double> out(sz);
    const auto& av = t->node(ia).val;
    for (std::size_t i = 0; i < sz; ++i) out[i] = fwd(av[i]);
    int id = t->emit(a.rows(), a.cols(), std::move(out), nullptr);
    t->node(id).back = [t, id, ia, sz, bwd]() {
        const auto& g = t->node(id).grad;
        const auto& xv = t->node(ia).val;
        const auto& yv = t->node(id).val;
        auto& ga = t->node(ia).grad;
        for (std::size_t i = 0; i < sz; ++i) ga[i] += g[i] * bwd(xv[i], yv[i]);
    };
    return Tensor(t, id);
}

}  // namespace

Tensor add(Tensor a, Tensor b) {
    return elementwise_binary("add", a, b,
                              [](double x, double y) { return x + y; },
                              [](double, double) { return std::pair{1.0, 1.0}; });
}

Tensor sub(Tensor a, Tensor b) {
    return elementwise_binary("sub", a, b,
                              [](double x, double y) { return x - y; },
                              [](double, double) { return std::pair{1.0, -1.0}; });
}

Tensor mul(Tensor a, Tensor b) {
    return elementwise_binary("mul", a, b,
                              [](double x, double y) { return x * y; },
                              [](double x, double y) { return std::pair{y, x}; });
}

Tensor cdiv(Tensor a, Tensor b) {
    return elementwise_binary("cdiv", a, b,
                              [](double x, double y) { return x / y; },
                              [](double x, double y) {
                                  return std::pair{1.0 / y, -x / (y * y)};
                              });
}

Tensor add_rowvec(Tensor m, Tensor r) {
    Tape* t = same_tape(m, r);
    if (r.rows() != 1 || r.cols() != m.cols()) shape_fail("add_rowvec", m, r);
    const std::size_t rows = m.rows(), cols = m.cols();
    const int im = m.id(), ir = r.id();
    std::vector<double> out(rows * cols);
    const auto& mv = t->node(im).val;
    const auto& rv = t->node(ir).val;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            out[i * cols + j] = mv[i * cols + j] + rv[j];
    int id = t->emit(rows, cols, std::move(out), nullptr);
    t->node(id).back = [t, id, im, ir, rows, cols]() {
        const auto& g = t->node(id).grad;
        auto& gm = t->node(im).grad;
        auto& gr = t->node(ir).grad;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                gm[i * cols + j] += g[i * cols + j];
                gr[j] += g[i * cols + j];
            }
    };
    return Tensor(t, id);
}

Tensor scale(Tensor a, double c) {
    return elementwise_unary(a,
                             [c](double x) { return c * x; },
                             [c](double, double) { return c; });
}

Tensor smul(Tensor s, Tensor a) {
    Tape* t = same_tape(s, a);
    if (s.rows() != 1 || s.cols() != 1) shape_fail("smul", s);
    const std::size_t sz = a.size();
    const int is = s.id(), ia = a.id();
    const double sv = t->node(is).val[0];
    std::vector<double> out(sz);
    const auto& av = t->node(ia).val;
    for (std::size_t i = 0; i < sz; ++i) out[i] = sv * av[i];
    int id = t->emit(a.rows(), a.cols(), std::move(out), nullptr);
    t->node(id).back = [t, id, is, ia, sz]() {
        const auto& g = t->node(id).grad;
        const auto& av = t->node(ia).val;
        const double sv2 = t->node(is).val[0];
        auto& gs = t->node(is).grad;
        auto& ga = t->node(ia).grad;
        double acc = 0.0;
        for (std::size_t i = 0; i < sz; ++i) {
            acc += g[i] * av[i];
            ga[i] += g[i] * sv2;
        }
        gs[0] += acc;
    };
    return Tensor(t, id);
}

Tensor sigmoid(Tensor a) {
    return elementwise_unary(a,
                             [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                             [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_op(Tensor a) {
    return elementwise_unary(a,
                             [](double x) { return std::tanh(x); },
                             [](double, double y) { return 1.0 - y * y; });
}

Tensor exp_op(Tensor a) {
    return elementwise_unary(a,
                             [](double x) { return std::exp(x); },
                             [](double, double y) { return y; });
}

Tensor log_op(Tensor a) {
    return elementwise_unary(a,
                             [](double x) { return std::log(std::max(x, 1e-30)); },
                             [](double x, double) { return x > 1e-30 ? 1.0 / x : 0.0; });
}

Tensor softmax_rows(Tensor a) {
    Tape* t = a.tape();
    const std::size_t rows = a.rows(), cols = a.cols();
    const int ia = a.id();
    std::vector<double> out(rows * cols);
    const auto& av = t->node(ia).val;
    for (std::size_t i = 0; i < rows; ++i) {
        double mx = av[i * cols];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, av[i * cols + j]);
        double z = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            out[i * cols + j] = std::exp(av[i * cols + j] - mx);
            z += out[i * cols + j];
        }
        for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] /= z;
    }
    int id = t->emit(rows, cols, std::move(out), nullptr);
    t->node(id).back = [t, id, ia, rows, cols]() {
        const auto& g = t->node(id).grad;
        const auto& y = t->node(id).val;
        auto& ga = t->node(ia).grad;
        for (std::size_t i = 0; i < rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += g[i * cols + j] * y[i * cols + j];
            for (std::size_t j = 0; j < cols; ++j)
                ga[i * cols + j] += y[i * cols + j] * (g[i * cols + j] - dot);
        }
    };
    return Tensor(t, id);
}

Tensor sum_all(Tensor a) {
    Tape* t = a.tape();
    const std::size_t sz = a.size();
    const int ia = a.id();
    double acc = 0.0;
    for (double v : t->node(ia).val) acc += v;
    int id = t->emit(1, 1, {acc}, nullptr);
    t->node(id).back = [t, id, ia, sz]() {
        const double g = t->node(id).grad[0];
        auto& ga = t->node(ia).grad;
        for (std::size_t i = 0; i < sz; ++i) ga[i] += g;
    };
    return Tensor(t, id);
}

Tensor mean_all(Tensor a) {
    return scale(sum_all(a), 1.0 / static_cast<double>(a.size()));
}

Tensor row_gather(Tensor a, const std::vector<std::size_t>& rows) {
    Tape* t = a.tape();
    const std::size_t cols = a.cols(), nr = rows.size();
    for (std::size_t r : rows)
        if (r >= a.rows())
            throw std::invalid_argument("row_gather: row index " + std::to_string(r) +
                                        " out of range for " + std::to_string(a.rows()) + " rows");
    const int ia = a.id();
    std::vector<double> out(nr * cols);
    const auto& av = t->node(ia).val;
    for (std::size_t i = 0; i < nr; ++i)
        std::copy(av.begin() + static_cast<long>(rows[i] * cols),
                  av.begin() + static_cast<long>((rows[i] + 1) * cols),
                  out.begin() + static_cast<long>(i * cols));
    int id = t->emit(nr, cols, std::move(out), nullptr);
    std::vector<std::size_t> idx = rows;
    t->node(id).back = [t, id, ia, idx, cols]() {
        const auto& g = t->node(id).grad;
        auto& ga = t->node(ia).grad;
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < cols; ++j)
                ga[idx[i] * cols + j] += g[i * cols + j];
    };
    return Tensor(t, id);
}

Tensor rows_l2norm(Tensor a) {
    constexpr double kEps2 = 1e-24;  // keeps the norm differentiable at zero rows
    Tape* t = a.tape();
    const std::size_t rows = a.rows(), cols = a.cols();
    const int ia = a.id();
    std::vector<double> out(rows);
    const auto& av = t->node(ia).val;
    for (std::size_t i = 0; i < rows; ++i) {
        double ss = kEps2;
        for (std::size_t j = 0; j < cols; ++j) ss += av[i * cols + j] * av[i * cols + j];
        out[i] = std::sqrt(ss);
    }
    int id = t->emit(rows, 1, std::move(out), nullptr);
    t->node(id).back = [t, id, ia, rows, cols]() {
        const auto& g = t->node(id).grad;
        const auto& n = t->node(id).val;
        const auto& av = t->node(ia).val;
        auto& ga = t->node(ia).grad;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                ga[i * cols + j] += g[i] * av[i * cols + j] / n[i];
    };
    return Tensor(t, id);
}

Tensor pick(Tensor a, std::size_t r, std::size_t c) {
    Tape* t = a.tape();
    if (r >= a.rows() || c >= a.cols())
        throw std::invalid_argument("pick: index out of range");
    const std::size_t cols = a.cols();
    const int ia = a.id();
    int id = t->emit(1, 1, {t->node(ia).val[r * cols + c]}, nullptr);
    t->node(id).back = [t, id, ia, r, c, cols]() {
        t->node(ia).grad[r * cols + c] += t->node(id).grad[0];
    };
    return Tensor(t, id);
}

Tensor gru_cell(Tensor h, Tensor x, const GruWeights& w) {
    const std::size_t d = h.cols();
    if (x.rows() != h.rows() || x.cols() != 2 * d)
        throw std::invalid_argument("gru_cell: x must be Nx2d for h Nxd, got x " +
                                    std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                    ", h " + std::to_string(h.rows()) + "x" + std::to_string(d));
    Tensor u = sigmoid(add_rowvec(add(matmul(x, transpose(w.w_update)),
                                      matmul(h, transpose(w.u_update))),
                                  w.b_update));
    Tensor r = sigmoid(add_rowvec(add(matmul(x, transpose(w.w_reset)),
                                      matmul(h, transpose(w.u_reset))),
                                  w.b_reset));
    Tensor cand = tanh_op(add_rowvec(add(matmul(x, transpose(w.w_cand)),
                                         matmul(mul(r, h), transpose(w.u_cand))),
                                     w.b_cand));
    // (1-u) ⊙ h + u ⊙ cand
    Tensor one_minus_u = add_rowvec(scale(u, -1.0),
                                    h.tape()->constant(1, d, std::vector<double>(d, 1.0)));
    return add(mul(one_minus_u, h), mul(u, cand));
}

}  // namespace murzim
