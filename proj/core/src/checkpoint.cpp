#include "wahmvc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "wahmvc/error.hpp"

namespace wahmvc::checkpoint {

namespace {

constexpr std::size_t kMagicSize = sizeof(kMagic) - 1;

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xffu));
    }
}

class Reader {
public:
    explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

    bool done() const { return pos_ == bytes_.size(); }

    template <typename T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
        need(sizeof(U));
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            bits |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += sizeof(U);
        return std::bit_cast<T>(bits);
    }

    std::string get_string(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw IoError("checkpoint: truncated record");
        }
    }

    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t Tensor::element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::vector<unsigned char> encode(const std::vector<Tensor>& tensors) {
    std::vector<unsigned char> out(kMagic, kMagic + kMagicSize);
    for (const auto& t : tensors) {
        if (t.values.size() != t.element_count()) {
            throw DimensionError("checkpoint: tensor '" + t.name + "' payload does not match its dims");
        }
        put_le(out, static_cast<std::uint32_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        put_le(out, static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) put_le(out, d);
        for (double v : t.values) put_le(out, v);
    }
    return out;
}

std::vector<Tensor> decode(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < kMagicSize || std::memcmp(bytes.data(), kMagic, kMagicSize) != 0) {
        throw IoError("checkpoint: missing WAHM1 magic");
    }
    const std::vector<unsigned char> body(bytes.begin() + kMagicSize, bytes.end());
    Reader r(body);
    std::vector<Tensor> out;
    while (!r.done()) {
        Tensor t;
        const auto name_len = r.get<std::uint32_t>();
        t.name = r.get_string(name_len);
        const auto rank = r.get<std::uint32_t>();
        if (rank > 8) {
            throw IoError("checkpoint: implausible rank for tensor '" + t.name + "'");
        }
        for (std::uint32_t i = 0; i < rank; ++i) t.dims.push_back(r.get<std::uint64_t>());
        const std::uint64_t count = t.element_count();
        if (count > body.size() / 8) {
            throw IoError("checkpoint: tensor '" + t.name + "' larger than file");
        }
        t.values.resize(count);
        for (auto& v : t.values) v = r.get<double>();
        out.push_back(std::move(t));
    }
    return out;
}

void save(const std::filesystem::path& path, const std::vector<Tensor>& tensors) {
    const auto bytes = encode(tensors);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("checkpoint: cannot open '" + path.string() + "' for writing");
    }
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
        throw IoError("checkpoint: write failed for '" + path.string() + "'");
    }
}

std::vector<Tensor> load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("checkpoint: cannot open '" + path.string() + "'");
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode(bytes);
}

}  // namespace wahmvc::checkpoint
