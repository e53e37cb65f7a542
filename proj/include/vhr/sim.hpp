/// @file sim.hpp
/// @brief Position-based-dynamics stepper with contact multiplier extraction.
///
/// Every frame runs `substeps` position predictions, each followed by
/// `solver_iterations` Gauss-Seidel sweeps over stretch -> shear -> bend ->
/// contact constraints in index order, then a velocity update from positions.
/// Contact projections accumulate their Lagrange multipliers per
/// (particle, body) pair across all iterations and substeps of one frame;
/// contacts_to_forces converts the accumulated position-level multiplier to an
/// average normal force over the frame.

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vhr/body.hpp"
#include "vhr/cloth.hpp"
#include "vhr/math.hpp"

namespace vhr::sim {

struct SimConfig {
    double dt = 1.0 / 100.0;        ///< frame timestep (s)
    int substeps = 4;
    int solver_iterations = 10;
    double particle_radius = 0.00625;   ///< m
    double contact_threshold = 0.005;   ///< d in the contact constraint (m)
    Vec3 gravity{0.0, 0.0, -9.81};
    double friction_coefficient = 0.3;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
        if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
        if (solver_iterations < 1) throw std::invalid_argument("solver_iterations must be >= 1");
        if (!(contact_threshold > 0.0)) throw std::invalid_argument("contact threshold must be > 0");
        if (friction_coefficient < 0.0) throw std::invalid_argument("friction must be >= 0");
    }
};

/// One cloth-particle / body contact over a frame.
struct ContactEvent {
    int particle_index = -1;
    int body_index = -1;
    Vec3 contact_point;      ///< closest point q on the body surface
    Vec3 normal;             ///< unit contact normal n
    double lambda = 0.0;     ///< accumulated multiplier, position units (m)
    double force_magnitude = 0.0;  ///< Newtons, filled by contacts_to_forces
    Vec3 contact_position;   ///< particle-side contact position x^C
};

/// Thrown when a frame produces non-finite state or a query fails.
struct SimAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rigid point-grasp anchor: pinned particles keep a fixed offset to the grasp.
struct GripperAnchor {
    std::vector<int> anchored_particles;
    std::vector<Vec3> offsets;       ///< particle - grasp at anchor time
    Vec3 grasp_position;
    Vec3 velocity;                   ///< finite difference of grasp over the frame dt
    std::vector<double> saved_inverse_mass;

    /// Rigidly places anchored particles for a grasp position.
    void apply(ClothState& cloth, const Vec3& grasp) const {
        for (std::size_t k = 0; k < anchored_particles.size(); ++k)
            cloth.particles[static_cast<std::size_t>(anchored_particles[k])].position =
                grasp + offsets[k];
    }

    /// Restores inverse masses (detach).
    void release(ClothState& cloth) const {
        for (std::size_t k = 0; k < anchored_particles.size(); ++k)
            cloth.particles[static_cast<std::size_t>(anchored_particles[k])].inverse_mass =
                saved_inverse_mass[k];
    }
};

/// Pins all particles within `radius` of `grasp_point` and records offsets.
inline GripperAnchor anchor_grasp(ClothState& cloth, const Vec3& grasp_point, double radius) {
    GripperAnchor anchor;
    anchor.grasp_position = grasp_point;
    double nearest = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < cloth.particles.size(); ++i) {
        const double d = norm(cloth.particles[i].position - grasp_point);
        nearest = std::min(nearest, d);
        if (d <= radius) {
            anchor.anchored_particles.push_back(static_cast<int>(i));
            anchor.offsets.push_back(cloth.particles[i].position - grasp_point);
            anchor.saved_inverse_mass.push_back(cloth.particles[i].inverse_mass);
            cloth.particles[i].inverse_mass = 0.0;
        }
    }
    if (anchor.anchored_particles.empty())
        throw std::invalid_argument("no particle within grasp radius " + std::to_string(radius) +
                                    " m; nearest is " + std::to_string(nearest) + " m away");
    return anchor;
}

/// Iteration-count-adjusted stiffness: applying k' once per iteration over N
/// iterations yields the same total correction fraction as k applied once.
inline double iteration_adjusted_stiffness(double k, int iterations) {
    return 1.0 - std::pow(1.0 - std::min(k, 1.0), 1.0 / static_cast<double>(iterations));
}

/// PBD distance projection between two particles toward `rest_length`.
/// Returns corrections for (i, j); zero for pinned particles. Returns nothing
/// for coincident particles (caller counts the skip).
inline std::optional<std::pair<Vec3, Vec3>> stretch_correction(const Vec3& pi, const Vec3& pj,
                                                               double wi, double wj,
                                                               double rest_length, double k) {
    const double wsum = wi + wj;
    if (wsum <= 0.0) return std::make_pair(Vec3{}, Vec3{});
    const Vec3 delta = pi - pj;
    const double len = norm(delta);
    if (len < 1e-9) return std::nullopt;
    const Vec3 dir = delta / len;
    const double c = len - rest_length;
    const Vec3 corr = dir * (k * c / wsum);
    return std::make_pair(corr * -wi, corr * wj);
}

/// Spec-shaped projection op for a stretch constraint (see stretch_correction).
inline std::optional<std::pair<Vec3, Vec3>> project_stretch(const StretchConstraint& c,
                                                            const std::vector<Particle>& particles,
                                                            double k_stretch, int iteration_count) {
    const auto& a = particles[static_cast<std::size_t>(c.i)];
    const auto& b = particles[static_cast<std::size_t>(c.j)];
    return stretch_correction(a.position, b.position, a.inverse_mass, b.inverse_mass, c.rest_length,
                              iteration_adjusted_stiffness(k_stretch, iteration_count));
}

namespace detail {

/// Dihedral-angle projection (Muller et al. 2007, appendix). Applies the
/// correction in place; no-op for degenerate or flat-gradient configurations.
inline void project_bend(std::vector<Particle>& particles, const BendConstraint& c, double k) {
    auto& a1 = particles[static_cast<std::size_t>(c.e0)];
    auto& a2 = particles[static_cast<std::size_t>(c.e1)];
    auto& a3 = particles[static_cast<std::size_t>(c.w0)];
    auto& a4 = particles[static_cast<std::size_t>(c.w1)];

    const Vec3 p2 = a2.position - a1.position;
    const Vec3 p3 = a3.position - a1.position;
    const Vec3 p4 = a4.position - a1.position;

    const Vec3 c23 = cross(p2, p3);
    const Vec3 c24 = cross(p2, p4);
    const double l23 = norm(c23), l24 = norm(c24);
    if (l23 < 1e-12 || l24 < 1e-12) return;

    const Vec3 n1 = c23 / l23, n2 = c24 / l24;
    const double d = clamp(dot(n1, n2), -1.0, 1.0);
    const double sin2 = 1.0 - d * d;
    if (sin2 < 1e-12) return;  // flat gradient, nothing to project

    const Vec3 q3 = (cross(p2, n2) + cross(n1, p2) * d) / l23;
    const Vec3 q4 = (cross(p2, n1) + cross(n2, p2) * d) / l24;
    const Vec3 q2 = (cross(p3, n2) + cross(n1, p3) * d) * (-1.0 / l23) +
                    (cross(p4, n1) + cross(n2, p4) * d) * (-1.0 / l24);
    const Vec3 q1 = -q2 - q3 - q4;

    const double denom = a1.inverse_mass * norm2(q1) + a2.inverse_mass * norm2(q2) +
                         a3.inverse_mass * norm2(q3) + a4.inverse_mass * norm2(q4);
    if (denom < 1e-12) return;

    const double scale = -std::sqrt(sin2) * (std::acos(d) - c.rest_angle) / denom * k;
    a1.position += q1 * (a1.inverse_mass * scale);
    a2.position += q2 * (a2.inverse_mass * scale);
    a3.position += q3 * (a3.inverse_mass * scale);
    a4.position += q4 * (a4.inverse_mass * scale);
}

}  // namespace detail

/// One contact projection of a particle position against a body. If the
/// constraint n^T (p - q) - d < 0 is violated, the position is moved so the
/// constraint holds exactly and the projection magnitude (the multiplier
/// increment) is returned along with the surface sample.
struct ContactProjection {
    SurfaceSample sample;
    double lambda = 0.0;
};

inline std::optional<ContactProjection> project_contact(Vec3& position, const RigidBody& body,
                                                        double d) {
    const SurfaceSample s = body.surface(position);
    if (!is_finite(s.q) || !is_finite(s.n) || !std::isfinite(s.sd))
        throw SimAbort("closest-point query returned non-finite result");
    const double c = dot(s.n, position - s.q) - d;
    if (c >= 0.0) return std::nullopt;
    position -= s.n * c;
    return ContactProjection{s, -c};
}

/// One-shot contact solve for a particle (test/inspection surface).
inline std::optional<ContactEvent> solve_contact(const Particle& particle, const RigidBody& body,
                                                 double d) {
    Vec3 pos = particle.position;
    const auto proj = project_contact(pos, body, d);
    if (!proj) return std::nullopt;
    ContactEvent ev;
    ev.contact_point = proj->sample.q;
    ev.normal = proj->sample.n;
    ev.lambda = proj->lambda;
    ev.contact_position = pos;
    return ev;
}

/// Converts accumulated position-level multipliers to average normal force
/// over the frame: F = m * lambda_total / (dt * dt_sub). With one substep this
/// is m * lambda / dt^2.
inline void contacts_to_forces(std::vector<ContactEvent>& events, double dt, int substeps,
                               double particle_mass) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    const double dt_sub = dt / static_cast<double>(substeps);
    for (auto& ev : events) ev.force_magnitude = particle_mass * ev.lambda / (dt * dt_sub);
}

struct StepStats {
    int skipped_degenerate_stretch = 0;
};

struct StepResult {
    std::vector<ContactEvent> events;
    StepStats stats;
};

/// Advances the cloth by one frame. `anchor`, when present, is driven linearly
/// from its previous grasp position to `grasp_target` across the substeps.
inline StepResult step(ClothState& cloth, const std::vector<RigidBody>& bodies,
                       GripperAnchor* anchor, const Vec3& grasp_target, const SimConfig& config) {
    config.validate();
    const int substeps = config.substeps;
    const double dt_sub = config.dt / substeps;
    const double k_stretch = iteration_adjusted_stiffness(cloth.stiffness.stretch, config.solver_iterations);
    const double k_shear = iteration_adjusted_stiffness(cloth.stiffness.shear, config.solver_iterations);
    const double k_bend = iteration_adjusted_stiffness(cloth.stiffness.bend, config.solver_iterations);

    StepResult result;
    // (particle, body) -> accumulated event, in deterministic key order.
    std::map<std::pair<int, int>, ContactEvent> events;

    const Vec3 grasp_start = anchor ? anchor->grasp_position : Vec3{};

    for (int s = 0; s < substeps; ++s) {
        // Predict under gravity.
        for (auto& p : cloth.particles) {
            p.previous_position = p.position;
            if (p.inverse_mass > 0.0) {
                p.velocity += config.gravity * dt_sub;
                p.position += p.velocity * dt_sub;
            }
        }
        // Drive the anchor toward this substep's interpolated grasp position.
        if (anchor) {
            const double a = static_cast<double>(s + 1) / substeps;
            anchor->apply(cloth, grasp_start + (grasp_target - grasp_start) * a);
        }

        for (int iter = 0; iter < config.solver_iterations; ++iter) {
            for (const auto& c : cloth.stretch_constraints) {
                auto& a = cloth.particles[static_cast<std::size_t>(c.i)];
                auto& b = cloth.particles[static_cast<std::size_t>(c.j)];
                const auto corr = stretch_correction(a.position, b.position, a.inverse_mass,
                                                     b.inverse_mass, c.rest_length, k_stretch);
                if (!corr) {
                    ++result.stats.skipped_degenerate_stretch;
                    continue;
                }
                a.position += corr->first;
                b.position += corr->second;
            }
            for (const auto& c : cloth.shear_constraints) {
                auto& a = cloth.particles[static_cast<std::size_t>(c.i)];
                auto& b = cloth.particles[static_cast<std::size_t>(c.j)];
                const auto corr = stretch_correction(a.position, b.position, a.inverse_mass,
                                                     b.inverse_mass, c.rest_length, k_shear);
                if (!corr) {
                    ++result.stats.skipped_degenerate_stretch;
                    continue;
                }
                a.position += corr->first;
                b.position += corr->second;
            }
            for (const auto& c : cloth.bend_constraints) detail::project_bend(cloth.particles, c, k_bend);

            for (std::size_t i = 0; i < cloth.particles.size(); ++i) {
                auto& p = cloth.particles[i];
                if (p.inverse_mass <= 0.0) continue;  // anchors are position-driven
                for (std::size_t b = 0; b < bodies.size(); ++b) {
                    const auto proj = project_contact(p.position, bodies[b], config.contact_threshold);
                    if (!proj) continue;
                    // Coulomb-style tangential clamp against this substep's start position.
                    const Vec3 disp = p.position - p.previous_position;
                    const Vec3 tangential = disp - proj->sample.n * dot(proj->sample.n, disp);
                    const double tlen = norm(tangential);
                    if (tlen > 1e-12) {
                        const double limit = config.friction_coefficient * proj->lambda;
                        p.position -= tangential * std::min(1.0, limit / tlen);
                    }
                    auto& ev = events[{static_cast<int>(i), static_cast<int>(b)}];
                    ev.particle_index = static_cast<int>(i);
                    ev.body_index = static_cast<int>(b);
                    ev.contact_point = proj->sample.q;
                    ev.normal = proj->sample.n;
                    ev.lambda += proj->lambda;
                    ev.contact_position = p.position;
                }
            }
        }

        // Velocity update from positions.
        for (auto& p : cloth.particles) p.velocity = (p.position - p.previous_position) / dt_sub;
    }

    if (anchor) {
        anchor->velocity = (grasp_target - anchor->grasp_position) / config.dt;
        anchor->grasp_position = grasp_target;
    }

    for (const auto& p : cloth.particles)
        if (!is_finite(p.position)) throw SimAbort("non-finite particle position after step");

    result.events.reserve(events.size());
    for (auto& [key, ev] : events) result.events.push_back(ev);
    contacts_to_forces(result.events, config.dt, substeps, cloth.mass_per_particle);
    return result;
}

/// Worst contact-constraint violation (positive value = penetration depth
/// beyond the threshold) over free particles; used by invariants and tests.
inline double max_contact_violation(const ClothState& cloth, const std::vector<RigidBody>& bodies,
                                    double d) {
    double worst = 0.0;
    for (const auto& p : cloth.particles) {
        if (p.inverse_mass <= 0.0) continue;
        for (const auto& body : bodies) {
            const SurfaceSample s = body.surface(p.position);
            const double c = dot(s.n, p.position - s.q) - d;
            if (-c > worst) worst = -c;
        }
    }
    return worst;
}

}  // namespace vhr::sim
