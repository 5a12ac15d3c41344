#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace murzim {

enum class Precision { Float32, Float64 };

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid as long as the tape lives.
class Tensor {
public:
    Tensor() = default;
    Tensor(Tape* t, int id) : tape_(t), id_(id) {}

    std::size_t rows() const;
    std::size_t cols() const;
    std::size_t size() const { return rows() * cols(); }
    double value(std::size_t r, std::size_t c) const;
    double scalar() const;
    const std::vector<double>& values() const;
    const std::vector<double>& grad() const;

    int id() const { return id_; }
    Tape* tape() const { return tape_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    int id_ = -1;
};

// Records forward primitives in execution order and replays their adjoints
// in reverse. All tensors are 2-D row-major matrices; vectors are 1xN or Nx1.
class Tape {
public:
    explicit Tape(Precision p = Precision::Float64) : precision_(p) {}

    Precision precision() const { return precision_; }

    // Leaf tensors. Parameters accumulate gradients; constants do not.
    Tensor param(std::size_t rows, std::size_t cols, std::vector<double> vals);
    Tensor constant(std::size_t rows, std::size_t cols, std::vector<double> vals);
    Tensor zeros(std::size_t rows, std::size_t cols);

    // Reverse sweep from a scalar loss. Every parameter reachable from the
    // loss receives a gradient; unreachable ones keep grad == 0.
    void backward(Tensor loss);
    void zero_grad();

    std::size_t num_nodes() const { return nodes_.size(); }

    // Internal node access, used by the op implementations and by tests.
    struct Node {
        std::size_t rows = 0, cols = 0;
        std::vector<double> val;
        std::vector<double> grad;
        std::function<void()> back;
    };
    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    int emit(std::size_t rows, std::size_t cols, std::vector<double> vals,
             std::function<void()> back = nullptr);

private:
    std::vector<Node> nodes_;
    Precision precision_;
};

// Primitive forward ops. Shape violations throw std::invalid_argument naming
// the op and the offending shapes.
Tensor matmul(Tensor a, Tensor b);
Tensor transpose(Tensor a);
Tensor concat_cols(Tensor a, Tensor b);
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);
Tensor cdiv(Tensor a, Tensor b);
Tensor add_rowvec(Tensor m, Tensor r);  // broadcast a 1xC row over an RxC matrix
Tensor scale(Tensor a, double c);
Tensor smul(Tensor s, Tensor a);        // scalar (1x1) tensor times matrix
Tensor sigmoid(Tensor a);
Tensor tanh_op(Tensor a);
Tensor exp_op(Tensor a);
Tensor log_op(Tensor a);                // inputs clamped at 1e-30 before log
Tensor softmax_rows(Tensor a);
Tensor sum_all(Tensor a);
Tensor mean_all(Tensor a);
Tensor row_gather(Tensor a, const std::vector<std::size_t>& rows);
Tensor rows_l2norm(Tensor a);           // Rx1 vector of row norms, eps-smoothed
Tensor pick(Tensor a, std::size_t r, std::size_t c);

struct GruWeights {
    Tensor w_update, u_update, b_update;
    Tensor w_reset, u_reset, b_reset;
    Tensor w_cand, u_cand, b_cand;
};

// Standard GRU applied row-wise: h is Nxd, x is Nx2d. W* are dx2d, U* dxd,
// biases 1xd. Returns the updated Nxd hidden state.
Tensor gru_cell(Tensor h, Tensor x, const GruWeights& w);

}  // namespace murzim
