/// @file json_support.hpp
/// @brief ADL hooks making the core math types usable with nlohmann::json.

#pragma once

#include "json.hpp"
#include "vhr/math.hpp"

namespace vhr {

inline void to_json(nlohmann::json& j, const Vec3& v) { j = nlohmann::json::array({v.x, v.y, v.z}); }
inline void from_json(const nlohmann::json& j, Vec3& v) {
    v = {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline void to_json(nlohmann::json& j, const Transform& t) {
    j = nlohmann::json{{"pos", t.pos}, {"rot", t.rot.m}};
}
inline void from_json(const nlohmann::json& j, Transform& t) {
    j.at("pos").get_to(t.pos);
    j.at("rot").get_to(t.rot.m);
}

}  // namespace vhr
