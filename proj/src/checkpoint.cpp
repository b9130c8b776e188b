#include "sparsegan/checkpoint.hpp"

#include <bit>
#include <fstream>

namespace sparsegan {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_i64(std::string& out, int64_t v) { put_u64(out, static_cast<uint64_t>(v)); }

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out += s;
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;
    const std::string& path;

    void need(size_t n) const {
        if (pos + n > buf.size()) {
            throw ParseError("checkpoint " + path + ": truncated at byte " + std::to_string(pos));
        }
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + static_cast<size_t>(i)])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + static_cast<size_t>(i)])) << (8 * i);
        pos += 8;
        return v;
    }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        uint32_t n = u32();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace

void Checkpoint::add_tensor(const std::string& name, const Tensor& t) {
    tensors.emplace_back(name, t);
}

void Checkpoint::add_blob(const std::string& name, std::string data) {
    blobs.emplace_back(name, std::move(data));
}

void Checkpoint::add_counter(const std::string& name, int64_t value) {
    counters.emplace_back(name, value);
}

const Tensor* Checkpoint::tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

const std::string* Checkpoint::blob(const std::string& name) const {
    for (const auto& [n, b] : blobs)
        if (n == name) return &b;
    return nullptr;
}

const int64_t* Checkpoint::counter(const std::string& name) const {
    for (const auto& [n, c] : counters)
        if (n == name) return &c;
    return nullptr;
}

Tensor Checkpoint::require_tensor(const std::string& name) const {
    const Tensor* t = tensor(name);
    if (!t) throw ConfigError("checkpoint: missing tensor '" + name + "'");
    return *t;
}

const std::string& Checkpoint::require_blob(const std::string& name) const {
    const std::string* b = blob(name);
    if (!b) throw ConfigError("checkpoint: missing blob '" + name + "'");
    return *b;
}

int64_t Checkpoint::require_counter(const std::string& name) const {
    const int64_t* c = counter(name);
    if (!c) throw ConfigError("checkpoint: missing counter '" + name + "'");
    return *c;
}

void Checkpoint::save(const std::string& path) const {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);

    put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        put_str(out, name);
        put_u32(out, static_cast<uint32_t>(t.shape().size()));
        for (int64_t dim : t.shape()) put_i64(out, dim);
        for (double v : t.data()) put_f64(out, v);
    }
    put_u32(out, static_cast<uint32_t>(blobs.size()));
    for (const auto& [name, data] : blobs) {
        put_str(out, name);
        put_u64(out, data.size());
        out += data;
    }
    put_u32(out, static_cast<uint32_t>(counters.size()));
    for (const auto& [name, value] : counters) {
        put_str(out, name);
        put_i64(out, value);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write on checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r{buf, 0, path};
    r.need(4);
    if (buf.compare(0, 4, kMagic, 4) != 0) {
        throw ParseError("checkpoint " + path + ": bad magic");
    }
    r.pos = 4;
    const uint32_t version = r.u32();
    if (version != kVersion) {
        throw ParseError("checkpoint " + path + ": unsupported version " + std::to_string(version));
    }

    Checkpoint ck;
    const uint32_t n_tensors = r.u32();
    for (uint32_t i = 0; i < n_tensors; ++i) {
        std::string name = r.str();
        const uint32_t rank = r.u32();
        Shape shape;
        for (uint32_t j = 0; j < rank; ++j) shape.push_back(r.i64());
        const int64_t numel = shape_numel(shape);
        if (numel < 0 || numel > (1 << 28)) {
            throw ParseError("checkpoint " + path + ": implausible tensor size for '" + name + "'");
        }
        std::vector<double> data(static_cast<size_t>(numel));
        for (double& v : data) v = r.f64();
        ck.tensors.emplace_back(std::move(name), Tensor::from_data(std::move(shape), std::move(data)));
    }
    const uint32_t n_blobs = r.u32();
    for (uint32_t i = 0; i < n_blobs; ++i) {
        std::string name = r.str();
        const uint64_t len = r.u64();
        r.need(len);
        ck.blobs.emplace_back(std::move(name), buf.substr(r.pos, len));
        r.pos += len;
    }
    const uint32_t n_counters = r.u32();
    for (uint32_t i = 0; i < n_counters; ++i) {
        std::string name = r.str();
        ck.counters.emplace_back(std::move(name), r.i64());
    }
    return ck;
}

} // namespace sparsegan
