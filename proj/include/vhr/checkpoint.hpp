/// @file checkpoint.hpp
/// @brief VHRM model checkpoint container.
///
/// Layout: magic "VHRM", version u32, spec JSON (length-prefixed), tensor
/// count u32, then per tensor a name, rows/cols header, and row-major
/// little-endian f64 data; a trailing CRC32 covers everything before it.

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "vhr/io.hpp"
#include "vhr/tape.hpp"

namespace vhr::learn {

constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    nlohmann::json spec;  ///< model kind, head, architecture spec, run config, seed
    std::vector<std::pair<std::string, Matrix>> tensors;

    static Checkpoint from_params(nlohmann::json spec, const std::vector<Param*>& params) {
        Checkpoint ck;
        ck.spec = std::move(spec);
        for (const Param* p : params) ck.tensors.emplace_back(p->name, p->value);
        return ck;
    }

    /// Loads tensor values into an existing parameter set (shape-checked).
    void restore_into(const std::vector<Param*>& params) const {
        if (params.size() != tensors.size())
            throw std::runtime_error("checkpoint tensor count does not match the model");
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& [name, value] = tensors[i];
            if (params[i]->name != name)
                throw std::runtime_error("checkpoint tensor order mismatch at " + name);
            if (params[i]->value.rows() != value.rows() || params[i]->value.cols() != value.cols())
                throw std::runtime_error("checkpoint tensor shape mismatch at " + name);
            params[i]->value = value;
        }
    }
};

inline std::vector<char> encode_checkpoint(const Checkpoint& ck) {
    ByteWriter w;
    w.bytes("VHRM", 4);
    w.u32(kCheckpointVersion);
    w.str(ck.spec.dump());
    w.u32(static_cast<std::uint32_t>(ck.tensors.size()));
    for (const auto& [name, m] : ck.tensors) {
        w.str(name);
        w.u32(static_cast<std::uint32_t>(m.rows()));
        w.u32(static_cast<std::uint32_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
    }
    ByteWriter out;
    out.bytes(w.data().data(), w.size());
    out.u32(crc32(w.data().data(), w.size()));
    return out.data();
}

inline Checkpoint decode_checkpoint(const std::vector<char>& bytes) {
    if (bytes.size() < 8) throw std::runtime_error("checkpoint truncated");
    const std::size_t body = bytes.size() - 4;
    ByteReader tail(bytes.data() + body, 4);
    if (tail.u32() != crc32(bytes.data(), body))
        throw std::runtime_error("checkpoint checksum mismatch (corrupted file)");

    ByteReader r(bytes.data(), body);
    char magic[4];
    std::memcpy(magic, r.take(4), 4);
    if (std::string(magic, 4) != "VHRM") throw std::runtime_error("not a VHRM checkpoint");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported VHRM version " + std::to_string(version));

    Checkpoint ck;
    ck.spec = nlohmann::json::parse(r.str());
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.str();
        const std::uint32_t rows = r.u32();
        const std::uint32_t cols = r.u32();
        Matrix m(rows, cols);
        for (std::uint32_t rr = 0; rr < rows; ++rr)
            for (std::uint32_t cc = 0; cc < cols; ++cc) m(rr, cc) = r.f64();
        ck.tensors.emplace_back(std::move(name), std::move(m));
    }
    return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    write_file(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::string& path) {
    return decode_checkpoint(read_file(path));
}

}  // namespace vhr::learn
