#include "mktcube/checkpoint.hpp"

#include "mktcube/errors.hpp"

#include <cstring>
#include <fstream>

namespace mktcube::ad {

namespace {

constexpr char kMagic[4] = {'M', 'K', 'T', 'C'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw IoError("checkpoint: cannot open " + path + " for writing");
    }
    void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void i64(std::int64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void array(const Array& a) { bytes(a.data(), static_cast<std::size_t>(a.size()) * 8); }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw MissingInputError("checkpoint: cannot open " + path);
    }
    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw IoError("checkpoint: truncated file " + path_ + " at byte offset " + std::to_string(offset_));
        }
        offset_ += n;
    }
    std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
    std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
    std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
    std::int64_t i64() { std::int64_t v; bytes(&v, 8); return v; }
    double f64() { double v; bytes(&v, 8); return v; }
    std::string str() {
        std::uint32_t n = u32();
        if (n > (1u << 20)) throw IoError("checkpoint: implausible string length at byte offset " + std::to_string(offset_ - 4));
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    Array array(Index n) {
        Array a(n);
        bytes(a.data(), static_cast<std::size_t>(n) * 8);
        return a;
    }
    std::size_t offset() const { return offset_; }

private:
    std::ifstream in_;
    std::string path_;
    std::size_t offset_ = 0;
};

} // namespace

Checkpoint Checkpoint::from(const std::string& model_kind, const ParamMap& params,
                            const OptimizerState* optimizer, const NormStatsBlob* stats) {
    Checkpoint c;
    c.model_kind = model_kind;
    for (const auto& [name, t] : params.items()) {
        c.param_shapes.emplace_back(name, std::vector<Index>(t->shape.begin(), t->shape.end()));
        c.param_data.push_back(t->data);
    }
    if (optimizer) c.optimizer = *optimizer;
    if (stats) c.norm_stats = *stats;
    return c;
}

void Checkpoint::restore_into(ParamMap& params) const {
    if (params.size() != param_shapes.size()) {
        throw std::invalid_argument("checkpoint: parameter count mismatch (" + std::to_string(param_shapes.size()) +
                                    " stored, " + std::to_string(params.size()) + " expected)");
    }
    for (std::size_t i = 0; i < param_shapes.size(); ++i) {
        const auto& [name, shape] = param_shapes[i];
        const auto& [pname, t] = params.items()[i];
        if (pname != name) throw std::invalid_argument("checkpoint: parameter name mismatch " + name + " vs " + pname);
        if (Shape(shape.begin(), shape.end()) != t->shape) {
            throw std::invalid_argument("checkpoint: shape mismatch for parameter " + name);
        }
        t->data = param_data[i];
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    w.str(ckpt.model_kind);
    w.u32(static_cast<std::uint32_t>(ckpt.param_shapes.size()));
    for (std::size_t i = 0; i < ckpt.param_shapes.size(); ++i) {
        const auto& [name, shape] = ckpt.param_shapes[i];
        w.str(name);
        w.u32(static_cast<std::uint32_t>(shape.size()));
        for (Index d : shape) w.i64(d);
        w.array(ckpt.param_data[i]);
    }
    w.u8(ckpt.optimizer ? 1 : 0);
    if (ckpt.optimizer) {
        const OptimizerState& st = *ckpt.optimizer;
        w.f64(st.learning_rate);
        w.f64(st.beta1);
        w.f64(st.beta2);
        w.f64(st.epsilon);
        w.u64(st.step);
        for (std::size_t i = 0; i < st.m.size(); ++i) {
            w.array(st.m[i]);
            w.array(st.v[i]);
        }
    }
    w.u8(ckpt.norm_stats ? 1 : 0);
    if (ckpt.norm_stats) {
        const NormStatsBlob& ns = *ckpt.norm_stats;
        w.u32(static_cast<std::uint32_t>(ns.names.size()));
        for (const auto& n : ns.names) w.str(n);
        for (double v : ns.mins) w.f64(v);
        for (double v : ns.maxs) w.f64(v);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("checkpoint: bad magic in " + path + " at byte offset 0");
    }
    std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw IoError("checkpoint: unsupported format version " + std::to_string(version) + " in " + path +
                      " at byte offset 4");
    }
    Checkpoint c;
    c.model_kind = r.str();
    std::uint32_t n_params = r.u32();
    for (std::uint32_t i = 0; i < n_params; ++i) {
        std::string name = r.str();
        std::uint32_t ndim = r.u32();
        if (ndim > 8) throw IoError("checkpoint: implausible rank at byte offset " + std::to_string(r.offset() - 4));
        std::vector<Index> shape(ndim);
        Index count = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            shape[d] = static_cast<Index>(r.i64());
            if (shape[d] <= 0) throw IoError("checkpoint: bad dimension at byte offset " + std::to_string(r.offset() - 8));
            count *= shape[d];
        }
        c.param_shapes.emplace_back(std::move(name), std::move(shape));
        c.param_data.push_back(r.array(count));
    }
    if (r.u8()) {
        OptimizerState st;
        st.learning_rate = r.f64();
        st.beta1 = r.f64();
        st.beta2 = r.f64();
        st.epsilon = r.f64();
        st.step = r.u64();
        for (std::size_t i = 0; i < c.param_data.size(); ++i) {
            Index n = c.param_data[i].size();
            st.m.push_back(r.array(n));
            st.v.push_back(r.array(n));
        }
        c.optimizer = std::move(st);
    }
    if (r.u8()) {
        NormStatsBlob ns;
        std::uint32_t n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) ns.names.push_back(r.str());
        ns.mins.resize(n);
        ns.maxs.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) ns.mins[i] = r.f64();
        for (std::uint32_t i = 0; i < n; ++i) ns.maxs[i] = r.f64();
        c.norm_stats = std::move(ns);
    }
    return c;
}

} // namespace mktcube::ad
