#include <bit>
#include <cstring>
#include <fstream>

#include "fsl/common/errors.hpp"
#include "fsl/federation/federation.hpp"

namespace fsl::federation {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'Q', 'L'};
constexpr std::uint32_t kMaxNameLen = 4096;
constexpr std::uint32_t kMaxRank = 2;

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<unsigned char>(value >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::string& source) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
        throw IoError(source + ": truncated checkpoint");
    }
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(buf[i]) << (8 * i);
    }
    return value;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write checkpoint " + path.string());
    }
    out.write(kMagic, 4);
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensors().size()));
    for (const auto& [name, t] : params.tensors()) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
        for (const std::size_t d : t.shape()) {
            put_le<std::uint64_t>(out, d);
        }
        for (const double x : t.data()) {
            put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
        }
    }
    if (!out) {
        throw IoError("failed writing checkpoint " + path.string());
    }
}

TensorMap read_checkpoint_tensors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    const std::string source = path.string();
    if (!in) {
        throw IoError("cannot open checkpoint " + source);
    }
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError(source + ": not a checkpoint (bad magic)");
    }
    const auto version = get_le<std::uint32_t>(in, source);
    if (version != kCheckpointVersion) {
        throw IoError(source + ": unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = get_le<std::uint32_t>(in, source);
    TensorMap tensors;
    for (std::uint32_t n = 0; n < count; ++n) {
        const auto name_len = get_le<std::uint32_t>(in, source);
        if (name_len == 0 || name_len > kMaxNameLen) {
            throw IoError(source + ": corrupt tensor name length");
        }
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) {
            throw IoError(source + ": truncated checkpoint");
        }
        const auto rank = get_le<std::uint32_t>(in, source);
        if (rank == 0 || rank > kMaxRank) {
            throw IoError(source + ": corrupt rank for '" + name + "'");
        }
        numerics::Shape shape(rank);
        std::uint64_t total = 1;
        for (auto& d : shape) {
            d = static_cast<std::size_t>(get_le<std::uint64_t>(in, source));
            total *= d;
            if (total > (std::uint64_t{1} << 32)) {
                throw IoError(source + ": tensor '" + name + "' is implausibly large");
            }
        }
        std::vector<double> data(static_cast<std::size_t>(total));
        for (double& x : data) {
            x = std::bit_cast<double>(get_le<std::uint64_t>(in, source));
        }
        numerics::Tensor t = rank == 1 ? numerics::Tensor::vector(std::move(data))
                                       : numerics::Tensor::matrix(shape[0], shape[1], std::move(data));
        if (!tensors.emplace(std::move(name), std::move(t)).second) {
            throw IoError(source + ": duplicate tensor name");
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw IoError(source + ": trailing bytes after the last tensor");
    }
    return tensors;
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
    auto tensors = read_checkpoint_tensors(path);
    try {
        return ParamSet::from_tensors(std::move(tensors));
    } catch (const DimensionError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

} // namespace fsl::federation
