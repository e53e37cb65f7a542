/// @file dataset.hpp
/// @brief VHRD dataset container: labeled, cropped point clouds with per-point
/// force and contact labels, grouped by trajectory, one file per split.
///
/// Layout: magic "VHRD", version u32, JSON header (length-prefixed), record
/// count u64, then per record a u32 payload length, the payload, and a u32
/// CRC32 of the payload. Payload: trajectory id u32, frame index u32, point
/// count u32, per point 3 f64 + class u8, gripper velocity 3 f64, object count
/// u32, force labels f64, contact labels u8.

#pragma once

#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "vhr/cloud.hpp"
#include "vhr/io.hpp"

namespace vhr::pipeline {

constexpr std::uint32_t kDatasetVersion = 1;

struct DatasetRecord {
    std::uint32_t trajectory_id = 0;
    std::uint32_t frame_index = 0;
    percept::LabeledPointCloud cloud;  ///< cropped; object points first
    Vec3 gripper_velocity;
    std::vector<double> force;           ///< per object point, Newtons
    std::vector<std::uint8_t> contact;   ///< per object point

    std::size_t object_count() const { return force.size(); }

    void validate() const {
        if (force.size() != contact.size()) throw std::runtime_error("record label arrays disagree");
        if (cloud.count(percept::PointClass::Object) != force.size())
            throw std::runtime_error("record labels do not align with object points");
        for (std::size_t i = 0; i < force.size(); ++i) {
            if (force[i] < 0.0) throw std::runtime_error("negative force label");
            if ((force[i] > 0.0) != (contact[i] != 0))
                throw std::runtime_error("contact label inconsistent with force label");
        }
    }
};

struct Dataset {
    nlohmann::json header;  ///< task, split, config, seed, stats
    std::vector<DatasetRecord> records;
};

struct DatasetStats {
    std::size_t records = 0;
    std::size_t trajectories = 0;
    double avg_cloth_points = 0.0;
    double avg_object_points = 0.0;
    double mean_positive_force = 0.0;
    double contact_fraction = 0.0;  ///< fraction of object points in contact
};

inline DatasetStats compute_stats(const std::vector<DatasetRecord>& records) {
    DatasetStats s;
    s.records = records.size();
    std::set<std::uint32_t> trajs;
    double cloth = 0.0, object = 0.0, fsum = 0.0;
    std::size_t fcount = 0, obj_total = 0, contact_total = 0;
    for (const auto& r : records) {
        trajs.insert(r.trajectory_id);
        cloth += static_cast<double>(r.cloud.count(percept::PointClass::Cloth));
        object += static_cast<double>(r.object_count());
        obj_total += r.object_count();
        for (std::size_t i = 0; i < r.force.size(); ++i) {
            if (r.contact[i]) {
                fsum += r.force[i];
                ++fcount;
                ++contact_total;
            }
        }
    }
    s.trajectories = trajs.size();
    if (!records.empty()) {
        cloth /= static_cast<double>(records.size());
        object /= static_cast<double>(records.size());
    }
    s.avg_cloth_points = cloth;
    s.avg_object_points = object;
    s.mean_positive_force = fcount ? fsum / static_cast<double>(fcount) : 0.0;
    s.contact_fraction = obj_total ? static_cast<double>(contact_total) / static_cast<double>(obj_total) : 0.0;
    return s;
}

inline void to_json(nlohmann::json& j, const DatasetStats& s) {
    j = {{"records", s.records},
         {"trajectories", s.trajectories},
         {"avg_cloth_points", s.avg_cloth_points},
         {"avg_object_points", s.avg_object_points},
         {"mean_positive_force", s.mean_positive_force},
         {"contact_fraction", s.contact_fraction}};
}

inline std::vector<char> encode_dataset(const Dataset& ds) {
    ByteWriter w;
    w.bytes("VHRD", 4);
    w.u32(kDatasetVersion);
    w.str(ds.header.dump());
    w.u64(ds.records.size());
    for (const auto& r : ds.records) {
        r.validate();
        ByteWriter p;
        p.u32(r.trajectory_id);
        p.u32(r.frame_index);
        p.u32(static_cast<std::uint32_t>(r.cloud.points.size()));
        for (const auto& pt : r.cloud.points) {
            p.f64(pt.position.x);
            p.f64(pt.position.y);
            p.f64(pt.position.z);
            p.u8(static_cast<std::uint8_t>(pt.cls));
        }
        p.f64(r.gripper_velocity.x);
        p.f64(r.gripper_velocity.y);
        p.f64(r.gripper_velocity.z);
        p.u32(static_cast<std::uint32_t>(r.force.size()));
        for (const double f : r.force) p.f64(f);
        for (const std::uint8_t c : r.contact) p.u8(c);

        w.u32(static_cast<std::uint32_t>(p.size()));
        w.bytes(p.data().data(), p.size());
        w.u32(crc32(p.data().data(), p.size()));
    }
    return w.data();
}

inline Dataset decode_dataset(const std::vector<char>& bytes) {
    ByteReader r(bytes.data(), bytes.size());
    char magic[4];
    std::memcpy(magic, r.take(4), 4);
    if (std::string(magic, 4) != "VHRD") throw std::runtime_error("not a VHRD dataset");
    const std::uint32_t version = r.u32();
    if (version != kDatasetVersion)
        throw std::runtime_error("unsupported VHRD version " + std::to_string(version));

    Dataset ds;
    ds.header = nlohmann::json::parse(r.str());
    const std::uint64_t count = r.u64();
    ds.records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t len = r.u32();
        const char* payload = r.take(len);
        const std::uint32_t stored_crc = r.u32();
        if (crc32(payload, len) != stored_crc)
            throw std::runtime_error("dataset record " + std::to_string(i) + " failed its checksum (corrupted file)");

        ByteReader p(payload, len);
        DatasetRecord rec;
        rec.trajectory_id = p.u32();
        rec.frame_index = p.u32();
        const std::uint32_t n_points = p.u32();
        rec.cloud.points.reserve(n_points);
        for (std::uint32_t k = 0; k < n_points; ++k) {
            percept::LabeledPoint pt;
            pt.position.x = p.f64();
            pt.position.y = p.f64();
            pt.position.z = p.f64();
            pt.cls = static_cast<percept::PointClass>(p.u8());
            rec.cloud.points.push_back(pt);
        }
        rec.gripper_velocity.x = p.f64();
        rec.gripper_velocity.y = p.f64();
        rec.gripper_velocity.z = p.f64();
        const std::uint32_t n_obj = p.u32();
        rec.force.resize(n_obj);
        for (std::uint32_t k = 0; k < n_obj; ++k) rec.force[k] = p.f64();
        rec.contact.resize(n_obj);
        for (std::uint32_t k = 0; k < n_obj; ++k) rec.contact[k] = p.u8();
        rec.validate();
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
    write_file(path, encode_dataset(ds));
}

inline Dataset load_dataset(const std::string& path) { return decode_dataset(read_file(path)); }

}  // namespace vhr::pipeline
