/// @file labels.hpp
/// @brief Ground-truth force labels: distributing contact normal-force
/// magnitudes onto nearby observed object points.

#pragma once

#include <stdexcept>
#include <vector>

#include "vhr/grid.hpp"
#include "vhr/math.hpp"
#include "vhr/sim.hpp"

namespace vhr::percept {

struct LabelCfg {
    double epsilon = 0.0312;  ///< contact-to-point distribution radius (m)
    double xi = 0.5;          ///< inverse-distance weight exponent

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
        if (!(xi > 0.0)) throw std::invalid_argument("xi must be > 0");
    }
};

struct ForceLabels {
    std::vector<double> force;        ///< f_i per object point, Newtons
    std::vector<std::uint8_t> contact;  ///< 1 iff f_i > 0
    int dropped_contacts = 0;         ///< contacts with no object point within epsilon

    double total() const {
        double s = 0.0;
        for (const double f : force) s += f;
        return s;
    }
};

/// Distributes each contact's force magnitude F_j over object points within
/// epsilon of the contact position, with weights w_i = |x^C_j - x_i|^-xi.
/// A contact coincident with a point (distance < 1e-9) gives that point the
/// full F_j; contacts with no recipient are dropped and counted.
inline ForceLabels distribute_forces(const std::vector<sim::ContactEvent>& contacts,
                                     const std::vector<Vec3>& object_points, const LabelCfg& cfg) {
    cfg.validate();
    ForceLabels labels;
    labels.force.assign(object_points.size(), 0.0);
    labels.contact.assign(object_points.size(), 0);

    const SpatialGrid grid(object_points, cfg.epsilon);
    std::vector<std::pair<std::size_t, double>> recipients;

    for (const auto& ev : contacts) {
        if (ev.force_magnitude <= 0.0) continue;
        recipients.clear();
        std::size_t coincident = object_points.size();
        grid.for_each_within(ev.contact_position, cfg.epsilon, [&](std::size_t i, double d2) {
            if (d2 >= cfg.epsilon * cfg.epsilon) return;
            const double d = std::sqrt(d2);
            if (d < 1e-9 && coincident == object_points.size()) coincident = i;
            recipients.emplace_back(i, d);
        });
        if (recipients.empty()) {
            ++labels.dropped_contacts;
            continue;
        }
        if (coincident != object_points.size()) {
            labels.force[coincident] += ev.force_magnitude;
            continue;
        }
        double wsum = 0.0;
        for (const auto& [i, d] : recipients) wsum += std::pow(d, -cfg.xi);
        for (const auto& [i, d] : recipients)
            labels.force[i] += ev.force_magnitude * std::pow(d, -cfg.xi) / wsum;
    }

    for (std::size_t i = 0; i < labels.force.size(); ++i)
        labels.contact[i] = labels.force[i] > 0.0 ? 1 : 0;
    return labels;
}

}  // namespace vhr::percept
