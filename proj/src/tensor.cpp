#include "tegamp/tensor.hpp"

#include "tegamp/detail/small_matrix.hpp"
#include "tegamp/errors.hpp"
#include "tegamp/random.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tegamp {

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw std::domain_error("shape must have at least one mode");
    strides_.assign(dims_.size(), 1);
    total_ = 1;
    for (std::size_t i = dims_.size(); i-- > 0;) {
        if (dims_[i] == 0) throw std::domain_error("shape dimensions must be >= 1");
        strides_[i] = total_;
        total_ *= dims_[i];
    }
}

bool Shape::contains(const MultiIndex& index) const {
    if (index.size() != dims_.size()) return false;
    for (std::size_t i = 0; i < dims_.size(); ++i)
        if (index[i] >= dims_[i]) return false;
    return true;
}

std::size_t Shape::flatten(const MultiIndex& index) const {
    if (!contains(index)) throw std::domain_error("multi-index out of range for shape " + str());
    std::size_t flat = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) flat += index[i] * strides_[i];
    return flat;
}

MultiIndex Shape::unflatten(std::size_t flat) const {
    if (flat >= total_) throw std::domain_error("flat index out of range");
    MultiIndex index(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        index[i] = flat / strides_[i];
        flat %= strides_[i];
    }
    return index;
}

std::string Shape::str() const {
    std::string s;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(dims_[i]);
    }
    return s;
}

bool next_index(const Shape& shape, MultiIndex& index) {
    for (std::size_t i = shape.order(); i-- > 0;) {
        if (++index[i] < shape.dim(i)) return true;
        index[i] = 0;
    }
    return false;
}

DenseTensor::DenseTensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_.total(), fill) {}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.total())
        throw std::domain_error("tensor data length does not match shape " + shape_.str());
}

double& DenseTensor::at(const MultiIndex& index) { return data_[shape_.flatten(index)]; }
double DenseTensor::at(const MultiIndex& index) const { return data_[shape_.flatten(index)]; }

double DenseTensor::frobenius_norm_sq() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
}

RankVector::RankVector(std::vector<std::size_t> ranks) : ranks_(std::move(ranks)) {
    if (ranks_.empty()) throw std::domain_error("rank vector must not be empty");
    for (auto r : ranks_)
        if (r == 0) throw std::domain_error("ranks must be >= 1");
}

TRCore::TRCore(std::size_t left, std::size_t n, std::size_t right, double fill)
    : left_(left), n_(n), right_(right), data_(left * n * right, fill) {
    if (left == 0 || n == 0 || right == 0) throw std::domain_error("TR core sizes must be >= 1");
}

TRFactors::TRFactors(std::vector<TRCore> cores) : cores_(std::move(cores)) {
    if (cores_.empty()) throw std::domain_error("TR factors need at least one core");
    const std::size_t d = cores_.size();
    for (std::size_t i = 0; i < d; ++i) {
        if (cores_[i].right() != cores_[(i + 1) % d].left())
            throw std::domain_error("TR core " + std::to_string(i) +
                                    " right rank does not match the next core's left rank");
    }
}

TRFactors::TRFactors(const Shape& shape, const RankVector& ranks, double fill) {
    if (ranks.size() != shape.order())
        throw std::domain_error("rank vector length must equal the tensor order");
    cores_.reserve(shape.order());
    for (std::size_t i = 0; i < shape.order(); ++i)
        cores_.emplace_back(ranks[i], shape.dim(i), ranks[i + 1], fill);
}

Shape TRFactors::shape() const {
    std::vector<std::size_t> dims;
    for (const auto& c : cores_) dims.push_back(c.n());
    return Shape(std::move(dims));
}

RankVector TRFactors::ranks() const {
    std::vector<std::size_t> r;
    for (const auto& c : cores_) r.push_back(c.left());
    return RankVector(std::move(r));
}

std::size_t TRFactors::parameter_count() const {
    std::size_t n = 0;
    for (const auto& c : cores_) n += c.values().size();
    return n;
}

bool TRFactors::congruent(const TRFactors& other) const {
    if (cores_.size() != other.cores_.size()) return false;
    for (std::size_t i = 0; i < cores_.size(); ++i)
        if (!cores_[i].same_dims(other.cores_[i])) return false;
    return true;
}

CPFactors::CPFactors(std::vector<Eigen::MatrixXd> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::domain_error("CP factors need at least one mode");
    const auto r = factors_[0].cols();
    if (r < 1) throw std::domain_error("CP rank must be >= 1");
    for (const auto& f : factors_) {
        if (f.cols() != r) throw std::domain_error("all CP factor matrices must share the rank");
        if (f.rows() < 1) throw std::domain_error("CP factor matrices need at least one row");
    }
}

CPFactors::CPFactors(const Shape& shape, std::size_t rank, double fill) {
    if (rank == 0) throw std::domain_error("CP rank must be >= 1");
    for (std::size_t i = 0; i < shape.order(); ++i)
        factors_.push_back(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(shape.dim(i)),
                                                     static_cast<Eigen::Index>(rank), fill));
}

Shape CPFactors::shape() const {
    std::vector<std::size_t> dims;
    for (const auto& f : factors_) dims.push_back(static_cast<std::size_t>(f.rows()));
    return Shape(std::move(dims));
}

bool CPFactors::congruent(const CPFactors& other) const {
    if (factors_.size() != other.factors_.size()) return false;
    for (std::size_t i = 0; i < factors_.size(); ++i)
        if (factors_[i].rows() != other.factors_[i].rows() ||
            factors_[i].cols() != other.factors_[i].cols())
            return false;
    return true;
}

double tr_contract(const TRFactors& factors, const MultiIndex& index) {
    const std::size_t d = factors.order();
    if (index.size() != d) throw std::domain_error("multi-index order does not match TR factors");
    for (std::size_t i = 0; i < d; ++i)
        if (index[i] >= factors.core(i).n()) throw std::domain_error("multi-index out of range");

    detail::ChainProduct chain;
    const auto& c0 = factors.core(0);
    chain.reset(c0.slice(index[0]).data(), c0.left(), c0.right());
    for (std::size_t i = 1; i < d; ++i) {
        const auto& c = factors.core(i);
        chain.multiply(c.slice(index[i]).data(), c.right());
    }
    return chain.trace();
}

DenseTensor tr_full(const TRFactors& factors) {
    const Shape shape = factors.shape();
    DenseTensor out(shape);
    MultiIndex index(shape.order(), 0);
    std::size_t flat = 0;
    do {
        out[flat++] = tr_contract(factors, index);
    } while (next_index(shape, index));
    return out;
}

double cp_evaluate(const CPFactors& factors, const MultiIndex& index) {
    const std::size_t d = factors.order();
    if (index.size() != d) throw std::domain_error("multi-index order does not match CP factors");
    for (std::size_t i = 0; i < d; ++i)
        if (index[i] >= static_cast<std::size_t>(factors.factor(i).rows()))
            throw std::domain_error("multi-index out of range");
    double sum = 0.0;
    for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(factors.rank()); ++l) {
        double prod = 1.0;
        for (std::size_t i = 0; i < d; ++i)
            prod *= factors.factor(i)(static_cast<Eigen::Index>(index[i]), l);
        sum += prod;
    }
    return sum;
}

DenseTensor cp_full(const CPFactors& factors) {
    const Shape shape = factors.shape();
    DenseTensor out(shape);
    MultiIndex index(shape.order(), 0);
    std::size_t flat = 0;
    do {
        out[flat++] = cp_evaluate(factors, index);
    } while (next_index(shape, index));
    return out;
}

TRFactors cp_to_tr(const CPFactors& factors) {
    const std::size_t r = factors.rank();
    std::vector<TRCore> cores;
    for (std::size_t i = 0; i < factors.order(); ++i) {
        const auto& a = factors.factor(i);
        TRCore core(r, static_cast<std::size_t>(a.rows()), r);
        for (std::size_t x = 0; x < core.n(); ++x)
            for (std::size_t l = 0; l < r; ++l)
                core(l, x, l) = a(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(l));
        cores.push_back(std::move(core));
    }
    return TRFactors(std::move(cores));
}

TRFactors tt_to_tr(const Eigen::MatrixXd& first, const std::vector<TRCore>& mids,
                   const Eigen::MatrixXd& last) {
    std::vector<TRCore> cores;
    TRCore head(1, static_cast<std::size_t>(first.rows()), static_cast<std::size_t>(first.cols()));
    for (std::size_t x = 0; x < head.n(); ++x)
        for (std::size_t b = 0; b < head.right(); ++b)
            head(0, x, b) = first(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(b));
    cores.push_back(std::move(head));
    for (const auto& m : mids) {
        if (m.left() != cores.back().right())
            throw std::domain_error("TT rank mismatch between consecutive cores");
        cores.push_back(m);
    }
    if (static_cast<std::size_t>(last.rows()) != cores.back().right())
        throw std::domain_error("TT rank mismatch at the last core");
    TRCore tail(static_cast<std::size_t>(last.rows()), static_cast<std::size_t>(last.cols()), 1);
    for (std::size_t a = 0; a < tail.left(); ++a)
        for (std::size_t x = 0; x < tail.n(); ++x)
            tail(a, x, 0) = last(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(x));
    cores.push_back(std::move(tail));
    return TRFactors(std::move(cores));
}

TRFactors tucker_to_tr(const TRFactors& core_tr, const std::vector<Eigen::MatrixXd>& factor_mats) {
    if (factor_mats.size() != core_tr.order())
        throw std::domain_error("one Tucker factor matrix per mode is required");
    std::vector<TRCore> cores;
    for (std::size_t i = 0; i < core_tr.order(); ++i) {
        const auto& y = core_tr.core(i);
        const auto& m = factor_mats[i];
        if (static_cast<std::size_t>(m.cols()) != y.n())
            throw std::domain_error("Tucker factor " + std::to_string(i) +
                                    " column count does not match the core mode size");
        TRCore z(y.left(), static_cast<std::size_t>(m.rows()), y.right());
        for (std::size_t x = 0; x < z.n(); ++x)
            for (std::size_t k = 0; k < y.n(); ++k) {
                const double w = m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k));
                for (std::size_t a = 0; a < y.left(); ++a)
                    for (std::size_t b = 0; b < y.right(); ++b) z(a, x, b) += w * y(a, k, b);
            }
        cores.push_back(std::move(z));
    }
    return TRFactors(std::move(cores));
}

TRFactors random_tr(const Shape& shape, const RankVector& ranks, std::uint64_t seed) {
    TRFactors factors(shape, ranks);
    Rng rng(seed);
    for (auto& core : factors.cores())
        for (auto& v : core.values()) v = rng.normal();
    return factors;
}

CPFactors random_cp(const Shape& shape, std::size_t rank, std::uint64_t seed) {
    CPFactors factors(shape, rank);
    Rng rng(seed);
    for (std::size_t i = 0; i < factors.order(); ++i) {
        auto& a = factors.factor(i);
        for (Eigen::Index x = 0; x < a.rows(); ++x)
            for (Eigen::Index l = 0; l < a.cols(); ++l) a(x, l) = rng.normal();
    }
    return factors;
}

namespace {

void write_number(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << '\n';
}

bool next_content_line(std::istream& in, std::string& line, std::size_t& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
}

double parse_double(const std::string& text, std::size_t lineno) {
    std::size_t pos = 0;
    double v = 0.0;
    const auto start = text.find_first_not_of(" \t");
    try {
        v = std::stod(text.substr(start), &pos);
    } catch (const std::exception&) {
        throw ParseError("expected a number, got '" + text + "'", lineno, start + 1);
    }
    const auto rest = text.find_first_not_of(" \t", start + pos);
    if (rest != std::string::npos)
        throw ParseError("trailing characters after number", lineno, rest + 1);
    return v;
}

std::vector<std::size_t> parse_header_sizes(const std::string& line, const std::string& key,
                                             std::size_t lineno) {
    if (line.rfind(key, 0) != 0) throw ParseError("expected '" + key + "' header", lineno, 1);
    std::istringstream ss(line.substr(key.size()));
    std::vector<std::size_t> out;
    std::string tok;
    while (ss >> tok) {
        if (tok.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError("expected a non-negative integer, got '" + tok + "'", lineno);
        out.push_back(std::stoull(tok));
    }
    return out;
}

}  // namespace

void write_tensor(std::ostream& out, const DenseTensor& tensor) {
    out << "dims:";
    for (auto n : tensor.shape().dims()) out << ' ' << n;
    out << '\n';
    for (double v : tensor.values()) write_number(out, v);
}

DenseTensor read_tensor(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!next_content_line(in, line, lineno)) throw ParseError("empty tensor file", 1);
    auto dims = parse_header_sizes(line, "dims:", lineno);
    if (dims.empty()) throw ParseError("tensor header lists no dimensions", lineno);
    Shape shape;
    try {
        shape = Shape(dims);
    } catch (const std::domain_error& e) {
        throw ParseError(e.what(), lineno);
    }
    std::vector<double> data;
    data.reserve(shape.total());
    while (data.size() < shape.total()) {
        if (!next_content_line(in, line, lineno))
            throw ParseError("expected " + std::to_string(shape.total()) + " values, found " +
                                 std::to_string(data.size()),
                             lineno + 1);
        data.push_back(parse_double(line, lineno));
    }
    if (next_content_line(in, line, lineno)) throw ParseError("unexpected extra value", lineno, 1);
    return DenseTensor(shape, std::move(data));
}

void save_tensor(const std::string& path, const DenseTensor& tensor) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_tensor(out, tensor);
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

DenseTensor load_tensor(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    try {
        return read_tensor(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_tr_factors(std::ostream& out, const TRFactors& factors) {
    out << "tr-factors: " << factors.order() << '\n';
    for (const auto& core : factors.cores()) {
        out << "core: " << core.left() << ' ' << core.n() << ' ' << core.right() << '\n';
        // logical (l_i, x_i, l_{i+1}) row-major order
        for (std::size_t a = 0; a < core.left(); ++a)
            for (std::size_t x = 0; x < core.n(); ++x)
                for (std::size_t b = 0; b < core.right(); ++b) write_number(out, core(a, x, b));
    }
}

TRFactors read_tr_factors(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!next_content_line(in, line, lineno)) throw ParseError("empty factors file", 1);
    auto head = parse_header_sizes(line, "tr-factors:", lineno);
    if (head.size() != 1 || head[0] == 0) throw ParseError("bad core count", lineno);
    std::vector<TRCore> cores;
    for (std::size_t i = 0; i < head[0]; ++i) {
        if (!next_content_line(in, line, lineno)) throw ParseError("missing core header", lineno + 1);
        auto dims = parse_header_sizes(line, "core:", lineno);
        if (dims.size() != 3) throw ParseError("core header needs three sizes", lineno);
        TRCore core;
        try {
            core = TRCore(dims[0], dims[1], dims[2]);
        } catch (const std::domain_error& e) {
            throw ParseError(e.what(), lineno);
        }
        for (std::size_t a = 0; a < core.left(); ++a)
            for (std::size_t x = 0; x < core.n(); ++x)
                for (std::size_t b = 0; b < core.right(); ++b) {
                    if (!next_content_line(in, line, lineno))
                        throw ParseError("truncated core values", lineno + 1);
                    core(a, x, b) = parse_double(line, lineno);
                }
        cores.push_back(std::move(core));
    }
    try {
        return TRFactors(std::move(cores));
    } catch (const std::domain_error& e) {
        throw ParseError(e.what(), lineno);
    }
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::string tok;
    std::istringstream ss(text);
    while (std::getline(ss, tok, ',')) {
        const auto b = tok.find_first_not_of(" \t");
        const auto e = tok.find_last_not_of(" \t");
        if (b == std::string::npos) throw ParseError("empty entry in list '" + text + "'");
        tok = tok.substr(b, e - b + 1);
        if (tok.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError("expected a positive integer, got '" + tok + "'");
        out.push_back(std::stoull(tok));
    }
    if (out.empty()) throw ParseError("empty list");
    return out;
}

}  // namespace tegamp
