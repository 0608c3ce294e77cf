#include "covplan/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace covplan {

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation act) {
    if (act == Activation::Relu) return z.cwiseMax(0.0);
    return z.array().tanh().matrix();
}

// Derivative expressed from the activation output.
Eigen::MatrixXd activate_grad_from_output(const Eigen::MatrixXd& a, Activation act) {
    if (act == Activation::Relu) return (a.array() > 0.0).cast<double>().matrix();
    return (1.0 - a.array().square()).matrix();
}

void check_input_size(const Mlp& net, Eigen::Index rows) {
    if (rows != net.input_size()) throw std::invalid_argument("mlp: input dimension mismatch");
}

}  // namespace

size_t Mlp::param_count() const {
    size_t n = 0;
    for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

Mlp make_mlp(std::vector<int> layer_sizes, Activation activation, Rng& rng) {
    if (layer_sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output layers");
    for (int s : layer_sizes) {
        if (s < 1) throw std::invalid_argument("mlp: layer sizes must be >= 1");
    }
    Mlp net;
    net.layer_sizes = std::move(layer_sizes);
    net.activation = activation;
    const size_t n_layers = net.layer_sizes.size() - 1;
    net.weights.resize(n_layers);
    net.biases.resize(n_layers);
    for (size_t l = 0; l < n_layers; ++l) {
        const int fan_in = net.layer_sizes[l];
        const int fan_out = net.layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        net.weights[l].resize(fan_out, fan_in);
        // Row-major draw order so the stream layout matches the checkpoint.
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) net.weights[l](r, c) = rng.uniform(-limit, limit);
        }
        net.biases[l] = Eigen::VectorXd::Zero(fan_out);
    }
    return net;
}

AdamState make_adam(const Mlp& net, double learning_rate) {
    AdamState opt;
    opt.learning_rate = learning_rate;
    opt.weight_m.reserve(net.weights.size());
    for (size_t l = 0; l < net.weights.size(); ++l) {
        opt.weight_m.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        opt.weight_v.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        opt.bias_m.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
        opt.bias_v.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    }
    return opt;
}

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs) {
    check_input_size(net, inputs.rows());
    Eigen::MatrixXd a = inputs;
    const size_t n_layers = net.weights.size();
    for (size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z = net.weights[l] * a;
        z.colwise() += net.biases[l];
        if (l + 1 < n_layers) {
            a = activate(z, net.activation);
        } else {
            a = std::move(z);
        }
    }
    return a;
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input) {
    return forward_batch(net, input);
}

GradBundle backward_batch(const Mlp& net, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& upstreams) {
    check_input_size(net, inputs.rows());
    if (upstreams.rows() != net.output_size())
        throw std::invalid_argument("mlp: upstream dimension mismatch");
    if (upstreams.cols() != inputs.cols())
        throw std::invalid_argument("mlp: upstream batch size mismatch");

    const size_t n_layers = net.weights.size();
    // Forward pass keeping each layer's activation output.
    std::vector<Eigen::MatrixXd> acts(n_layers + 1);
    acts[0] = inputs;
    for (size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z = net.weights[l] * acts[l];
        z.colwise() += net.biases[l];
        if (l + 1 < n_layers) {
            acts[l + 1] = activate(z, net.activation);
        } else {
            acts[l + 1] = std::move(z);
        }
    }

    GradBundle grads;
    grads.weight_grads.resize(n_layers);
    grads.bias_grads.resize(n_layers);

    Eigen::MatrixXd delta = upstreams;  // dL/dz for the output layer (linear)
    for (size_t l = n_layers; l-- > 0;) {
        grads.weight_grads[l] = delta * acts[l].transpose();
        grads.bias_grads[l] = delta.rowwise().sum();
        Eigen::MatrixXd da = net.weights[l].transpose() * delta;
        if (l > 0) {
            delta = da.cwiseProduct(activate_grad_from_output(acts[l], net.activation));
        } else {
            grads.input_grads = std::move(da);
        }
    }
    return grads;
}

GradBundle backward(const Mlp& net, const Eigen::VectorXd& input, const Eigen::VectorXd& upstream) {
    return backward_batch(net, input, upstream);
}

void adam_step(Mlp& net, const GradBundle& grads, AdamState& opt) {
    const size_t n_layers = net.weights.size();
    if (grads.weight_grads.size() != n_layers || grads.bias_grads.size() != n_layers)
        throw std::invalid_argument("adam: gradient layer count mismatch");
    for (size_t l = 0; l < n_layers; ++l) {
        if (grads.weight_grads[l].rows() != net.weights[l].rows() ||
            grads.weight_grads[l].cols() != net.weights[l].cols() ||
            grads.bias_grads[l].size() != net.biases[l].size())
            throw std::invalid_argument("adam: gradient shape mismatch");
        if (!grads.weight_grads[l].allFinite() || !grads.bias_grads[l].allFinite())
            throw std::invalid_argument("adam: non-finite gradient entries");
    }

    opt.step_count += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));

    for (size_t l = 0; l < n_layers; ++l) {
        auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
            m = opt.beta1 * m + (1.0 - opt.beta1) * g;
            v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
            param.array() -=
                opt.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + opt.epsilon);
        };
        update(net.weights[l], opt.weight_m[l], opt.weight_v[l], grads.weight_grads[l]);
        update(net.biases[l], opt.bias_m[l], opt.bias_v[l], grads.bias_grads[l]);
    }
}

// --- checkpoint io ---

namespace {

constexpr char kMlpMagic[4] = {'C', 'N', 'E', 'T'};
constexpr char kAdamMagic[4] = {'C', 'A', 'D', 'M'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated stream");
    return value;
}

// Matrices stored row-major regardless of Eigen's internal layout.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod(out, m(r, c));
    }
}

void read_matrix(std::istream& in, Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_pod<double>(in);
    }
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) write_pod(out, v(i));
}

void read_vector(std::istream& in, Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = read_pod<double>(in);
}

void expect_magic(std::istream& in, const char (&magic)[4], const char* what) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0)
        throw std::runtime_error(std::string("checkpoint: bad magic for ") + what);
    const uint32_t version = read_pod<uint32_t>(in);
    if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
}

}  // namespace

void save_mlp(const Mlp& net, std::ostream& out) {
    out.write(kMlpMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, static_cast<uint8_t>(net.activation));
    write_pod(out, static_cast<uint32_t>(net.layer_sizes.size()));
    for (int s : net.layer_sizes) write_pod(out, static_cast<uint32_t>(s));
    for (size_t l = 0; l < net.weights.size(); ++l) {
        write_matrix(out, net.weights[l]);
        write_vector(out, net.biases[l]);
    }
}

Mlp load_mlp(std::istream& in) {
    expect_magic(in, kMlpMagic, "mlp");
    Mlp net;
    net.activation = static_cast<Activation>(read_pod<uint8_t>(in));
    const uint32_t n_sizes = read_pod<uint32_t>(in);
    if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("checkpoint: implausible layer count");
    net.layer_sizes.resize(n_sizes);
    for (uint32_t i = 0; i < n_sizes; ++i) net.layer_sizes[i] = static_cast<int>(read_pod<uint32_t>(in));
    const size_t n_layers = n_sizes - 1;
    net.weights.resize(n_layers);
    net.biases.resize(n_layers);
    for (size_t l = 0; l < n_layers; ++l) {
        net.weights[l].resize(net.layer_sizes[l + 1], net.layer_sizes[l]);
        net.biases[l].resize(net.layer_sizes[l + 1]);
        read_matrix(in, net.weights[l]);
        read_vector(in, net.biases[l]);
    }
    return net;
}

void save_adam(const AdamState& opt, std::ostream& out) {
    out.write(kAdamMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, opt.learning_rate);
    write_pod(out, opt.beta1);
    write_pod(out, opt.beta2);
    write_pod(out, opt.epsilon);
    write_pod(out, opt.step_count);
    write_pod(out, static_cast<uint32_t>(opt.weight_m.size()));
    for (size_t l = 0; l < opt.weight_m.size(); ++l) {
        write_pod(out, static_cast<uint32_t>(opt.weight_m[l].rows()));
        write_pod(out, static_cast<uint32_t>(opt.weight_m[l].cols()));
        write_matrix(out, opt.weight_m[l]);
        write_matrix(out, opt.weight_v[l]);
        write_vector(out, opt.bias_m[l]);
        write_vector(out, opt.bias_v[l]);
    }
}

AdamState load_adam(std::istream& in) {
    expect_magic(in, kAdamMagic, "adam");
    AdamState opt;
    opt.learning_rate = read_pod<double>(in);
    opt.beta1 = read_pod<double>(in);
    opt.beta2 = read_pod<double>(in);
    opt.epsilon = read_pod<double>(in);
    opt.step_count = read_pod<int64_t>(in);
    const uint32_t n_layers = read_pod<uint32_t>(in);
    if (n_layers > 64) throw std::runtime_error("checkpoint: implausible layer count");
    opt.weight_m.resize(n_layers);
    opt.weight_v.resize(n_layers);
    opt.bias_m.resize(n_layers);
    opt.bias_v.resize(n_layers);
    for (uint32_t l = 0; l < n_layers; ++l) {
        const uint32_t rows = read_pod<uint32_t>(in);
        const uint32_t cols = read_pod<uint32_t>(in);
        opt.weight_m[l].resize(rows, cols);
        opt.weight_v[l].resize(rows, cols);
        opt.bias_m[l].resize(rows);
        opt.bias_v[l].resize(rows);
        read_matrix(in, opt.weight_m[l]);
        read_matrix(in, opt.weight_v[l]);
        read_vector(in, opt.bias_m[l]);
        read_vector(in, opt.bias_v[l]);
    }
    return opt;
}

}  // namespace covplan
