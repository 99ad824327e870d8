// SPDX-License-Identifier: Apache-2.0

#include "rfplan/rt.hpp"

#include "rfplan/electromagnetics.hpp"
#include "rfplan/error.hpp"
#include "rfplan/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <unordered_map>

namespace rfplan
{

namespace
{

// Interaction sequences are packed as up to three 21-bit codes, first event in the low bits.
using Signature = std::uint64_t;
constexpr int kEventBits = 21;
constexpr std::uint64_t kEventMask = (std::uint64_t{1} << kEventBits) - 1;
constexpr std::uint32_t kDiffractionFlag = std::uint32_t{1} << 20;
constexpr int kMaxEvents = 3;

constexpr double kPointTolerance = 1e-9;
constexpr double kGoldenTolerance = 1e-6;
constexpr double kKellerTolerance = 0.5 * M_PI / 180.0;
constexpr double kLegTolerance = 1e-6;

struct Event
{
    bool diffraction = false;
    std::uint32_t id = 0;
};

int sig_size(Signature s)
{
    int n = 0;
    while (n < kMaxEvents && ((s >> (kEventBits * n)) & kEventMask) != 0)
        ++n;
    return n;
}

Event sig_event(Signature s, int i)
{
    const auto code = static_cast<std::uint32_t>(((s >> (kEventBits * i)) & kEventMask) - 1);
    return {(code & kDiffractionFlag) != 0, code & (kDiffractionFlag - 1)};
}

Signature sig_push(Signature s, Event e)
{
    const std::uint64_t code = std::uint64_t{(e.diffraction ? kDiffractionFlag : 0u) | e.id} + 1;
    return s | (code << (kEventBits * sig_size(s)));
}

std::vector<Vec3> fibonacci_sphere(std::size_t n)
{
    std::vector<Vec3> out(n);
    const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < n; ++i)
    {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * static_cast<double>(i);
        out[i] = {r * std::cos(phi), r * std::sin(phi), z};
    }
    return out;
}

Vec3 reflect(const Vec3 &d, const Vec3 &n)
{
    return d - n * (2.0 * dot(d, n));
}

Vec3 closest_on_segment(const Vec3 &p, const Vec3 &a, const Vec3 &b)
{
    const Vec3 ab = b - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    return a + ab * t;
}

// Uniform 2D bucket grid over the receivers' footprint, queried by chunks along a ray.
class ReceiverIndex
{
  public:
    explicit ReceiverIndex(const std::vector<Vec3> &rx) : rx_(rx)
    {
        for (const auto &p : rx)
            box_.expand(p);
        const Vec3 ext = box_.extent();
        const double area = std::max(ext.x, 1e-3) * std::max(ext.y, 1e-3);
        cell_ = std::clamp(std::sqrt(area / static_cast<double>(std::max<std::size_t>(rx.size(), 1))), 0.25, 8.0);
        while ((ext.x / cell_ + 1.0) * (ext.y / cell_ + 1.0) > 4e6)
            cell_ *= 2.0;
        nx_ = static_cast<std::size_t>(ext.x / cell_) + 1;
        ny_ = static_cast<std::size_t>(ext.y / cell_) + 1;
        cells_.assign(nx_ * ny_, {});
        for (std::size_t i = 0; i < rx.size(); ++i)
            cells_[cell_of(rx[i].x, rx[i].y)].push_back(static_cast<std::uint32_t>(i));
    }

    // Receivers whose closest approach to origin + t dir, t in [0, len], lies within k (base + t).
    template <typename Fn>
    void capture(const Vec3 &origin, const Vec3 &dir, double len, double base, double k, Fn &&fn) const
    {
        if (rx_.empty() || len <= 0.0)
            return;
        const double r_max = k * (base + len);
        double t0 = 0.0;
        double t1 = len;
        const Vec3 inv{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
        if (!box_.inflated(r_max).clip(origin, inv, t0, t1))
            return;
        for (double ta = t0; ta < t1; ta += cell_)
        {
            const double tb = std::min(t1, ta + cell_);
            const bool last = tb >= t1;
            const double r = k * (base + tb);
            const Vec3 pa = origin + dir * ta;
            const Vec3 pb = origin + dir * tb;
            if (std::max(pa.z, pb.z) + r < box_.min.z || std::min(pa.z, pb.z) - r > box_.max.z)
                continue;
            const auto [ix0, iy0] = clamp_cell(std::min(pa.x, pb.x) - r, std::min(pa.y, pb.y) - r);
            const auto [ix1, iy1] = clamp_cell(std::max(pa.x, pb.x) + r, std::max(pa.y, pb.y) + r);
            for (std::size_t iy = iy0; iy <= iy1; ++iy)
                for (std::size_t ix = ix0; ix <= ix1; ++ix)
                    for (std::uint32_t idx : cells_[iy * nx_ + ix])
                    {
                        const Vec3 v = rx_[idx] - origin;
                        const double t = dot(v, dir);
                        if (t < ta || (last ? t > tb : t >= tb))
                            continue;
                        const double radius = k * (base + t);
                        if (dot(v, v) - t * t <= radius * radius)
                            fn(idx);
                    }
            if (last)
                break;
        }
    }

  private:
    std::size_t cell_of(double x, double y) const
    {
        const auto [ix, iy] = clamp_cell(x, y);
        return iy * nx_ + ix;
    }

    std::pair<std::size_t, std::size_t> clamp_cell(double x, double y) const
    {
        const double fx = std::clamp((x - box_.min.x) / cell_, 0.0, static_cast<double>(nx_ - 1));
        const double fy = std::clamp((y - box_.min.y) / cell_, 0.0, static_cast<double>(ny_ - 1));
        return {static_cast<std::size_t>(fx), static_cast<std::size_t>(fy)};
    }

    const std::vector<Vec3> &rx_;
    Aabb box_;
    double cell_ = 1.0;
    std::size_t nx_ = 1;
    std::size_t ny_ = 1;
    std::vector<std::vector<std::uint32_t>> cells_;
};

struct Ray
{
    Vec3 origin;
    Vec3 dir;
    double base = 0.0; // unfolded length already travelled
    Signature sig = 0;
    int reflections = 0;
    double loss_db = 0.0; // accumulated transmission loss
    bool clean = true;    // no solid crossed so far
};

struct Registration
{
    std::uint64_t rank = 0;
    Vec3 point;
};

using RegistrationKey = std::pair<WedgeId, Signature>;

struct RegistrationHash
{
    std::size_t operator()(const RegistrationKey &k) const
    {
        return std::hash<std::uint64_t>()(k.second * 0x9E3779B97F4A7C15ull ^ k.first);
    }
};

struct Discovery
{
    std::vector<std::vector<Signature>> captures; // per receiver
    std::unordered_map<RegistrationKey, Registration, RegistrationHash> registrations;
};

struct Tracer
{
    const Geometry &geometry;
    const ReceiverIndex &index;
    const RtConfig &cfg;
    Vec3 scene_center;
    double scene_diagonal = 0.0;

    // Walks one launch ray and all of its reflection children. Secondary rays stop at their first hit.
    void run(const Ray &start, std::uint64_t ray_index, double radius_factor, bool secondary, int min_capture,
             Discovery &out, std::vector<Ray> &stack) const
    {
        std::uint32_t counter = 0;
        stack.clear();
        stack.push_back(start);
        while (!stack.empty())
        {
            const Ray ray = stack.back();
            stack.pop_back();
            const double far = scene_diagonal + distance(ray.origin, scene_center) + 1.0;
            const Vec3 ray_end = ray.origin + ray.dir * far;
            std::vector<Hit> hits;
            if (!secondary)
                hits = segment_hits(geometry, ray.origin, ray_end);
            else if (auto h = geometry.first_hit(ray.origin, ray_end, kGrazingTolerance))
                hits.push_back(*h);

            struct Open
            {
                std::uint32_t solid;
                double entry;
                double rate;
            };
            std::vector<Open> open;
            double closed_loss = 0.0;
            double t_end = far;

            for (std::size_t i = 0; i < hits.size(); ++i)
            {
                const Hit &h = hits[i];
                const Facet &f = geometry.facet(h.facet_id);
                double loss = ray.loss_db + closed_loss;
                for (const auto &o : open)
                    loss += o.rate * (h.distance - o.entry);
                if (loss > cfg.discovery_loss_cap_db)
                {
                    t_end = h.distance;
                    break;
                }
                const Vec3 p = ray.origin + ray.dir * h.distance;

                if (!secondary && i == 0 && ray.clean && cfg.max_diffractions > 0 && sig_size(ray.sig) < kMaxEvents)
                {
                    const double r = radius_factor * (ray.base + h.distance);
                    for (WedgeId w : geometry.wedges_of_facet(f.id))
                    {
                        const Wedge &wedge = geometry.wedge(w);
                        const Vec3 q = closest_on_segment(p, wedge.start, wedge.end);
                        if (distance(p, q) > r)
                            continue;
                        const std::uint64_t rank = (ray_index << 20) | std::min<std::uint32_t>(counter++, 0xFFFFF);
                        auto [it, inserted] = out.registrations.try_emplace({w, ray.sig}, Registration{rank, q});
                        if (!inserted && rank < it->second.rank)
                            it->second = {rank, q};
                    }
                }

                const bool exterior = f.two_sided || h.entry_exit == Crossing::entering;
                if (exterior && ray.reflections < cfg.max_reflections && sig_size(ray.sig) < kMaxEvents)
                {
                    const Vec3 facing = dot(ray.dir, f.normal) < 0.0 ? f.normal : -f.normal;
                    Ray child;
                    child.origin = p + facing * kSelfIntersectionOffset;
                    child.dir = normalized(reflect(ray.dir, f.normal));
                    child.base = ray.base + h.distance;
                    child.sig = sig_push(ray.sig, {false, f.id});
                    child.reflections = ray.reflections + 1;
                    child.loss_db = loss;
                    child.clean = ray.clean && i == 0;
                    stack.push_back(child);
                }

                if (secondary || f.two_sided)
                {
                    t_end = h.distance;
                    break;
                }
                const std::uint32_t solid = f.solid;
                const double rate = geometry.facet_material(f.id).transmission_loss_rate;
                auto it = std::find_if(open.begin(), open.end(), [&](const Open &o) { return o.solid == solid; });
                if (h.entry_exit == Crossing::entering)
                {
                    if (it == open.end())
                        open.push_back({solid, h.distance, rate});
                }
                else if (it != open.end())
                {
                    closed_loss += it->rate * (h.distance - it->entry);
                    open.erase(it);
                }
                else
                {
                    closed_loss += rate * h.distance;
                }
            }

            if (sig_size(ray.sig) >= min_capture)
                index.capture(ray.origin, ray.dir, t_end, ray.base, radius_factor,
                              [&](std::uint32_t rx) {
                                  auto &list = out.captures[rx];
                                  if (list.empty() || list.back() != ray.sig)
                                      list.push_back(ray.sig);
                              });
        }
    }
};

// Point on the segment plane intersection strictly between a and b and inside the facet.
std::optional<Vec3> plane_crossing(const Vec3 &a, const Vec3 &b, const Facet &f)
{
    const Vec3 d = b - a;
    const double denom = dot(f.normal, d);
    if (std::abs(denom) < 1e-15)
        return std::nullopt;
    const double s = (f.offset - dot(f.normal, a)) / denom;
    if (!(s > 1e-12 && s < 1.0 - 1e-12))
        return std::nullopt;
    const Vec3 p = a + d * s;
    if (!f.contains(p, kPointTolerance))
        return std::nullopt;
    return p;
}

// Edge parameter minimising |i - q| + |q - j| by golden-section search.
double golden_edge_point(const Wedge &w, const Vec3 &i, const Vec3 &j)
{
    const double len = w.length();
    auto cost = [&](double t) {
        const Vec3 q = w.start + w.direction * t;
        return distance(i, q) + distance(q, j);
    };
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0;
    double b = len;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = cost(c);
    double fd = cost(d);
    while (b - a > kGoldenTolerance)
    {
        if (fc < fd)
        {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = cost(c);
        }
        else
        {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = cost(d);
        }
    }
    return 0.5 * (a + b);
}

// Angular position about the edge line lies outside the solid (or strictly off a half-plane's sheet).
bool in_exterior(const Wedge &w, const Vec3 &p)
{
    Vec3 v = p - w.start;
    v -= w.direction * dot(v, w.direction);
    if (norm(v) < 1e-12)
        return false;
    double phi = std::atan2(dot(v, w.face_a_normal), dot(v, w.face_a_tangent));
    if (phi < 0.0)
        phi += 2.0 * M_PI;
    return phi <= w.exterior_angle + 1e-9 || phi >= 2.0 * M_PI - 1e-9;
}

Vec3 initial_polarization(const Vec3 &dir)
{
    Vec3 p = Vec3{0, 0, 1} - dir * dir.z;
    if (norm(p) < 1e-9)
        p = Vec3{1, 0, 0} - dir * dir.x;
    return normalized(p);
}

double power_db(double linear)
{
    return -10.0 * std::log10(std::max(linear, 1e-300));
}

// Reflection loss and outgoing polarisation from the TE/TM split in the plane of incidence.
double reflection_loss(const Material &m, const Vec3 &d_in, const Vec3 &d_out, const Vec3 &normal, double f_ghz,
                       Vec3 &pol)
{
    const Vec3 n = dot(d_in, normal) < 0.0 ? normal : -normal;
    const double theta = std::acos(std::clamp(-dot(d_in, n), 0.0, 1.0));
    const double incidence = std::min(theta, std::nextafter(M_PI / 2, 0.0));
    const double r_te = std::abs(fresnel_reflection(m, incidence, Polarization::TE, f_ghz));
    const double r_tm = std::abs(fresnel_reflection(m, incidence, Polarization::TM, f_ghz));

    Vec3 e_perp = cross(d_in, n);
    if (norm(e_perp) < 1e-12)
    {
        // Normal incidence: both components reflect alike.
        pol = normalized(pol - d_out * dot(pol, d_out));
        return power_db(r_te * r_te);
    }
    e_perp = normalized(e_perp);
    const double a_perp = dot(pol, e_perp);
    const double a_par = std::sqrt(std::max(0.0, 1.0 - a_perp * a_perp));
    const double factor = a_perp * a_perp * r_te * r_te + a_par * a_par * r_tm * r_tm;
    const Vec3 e_par_out = normalized(cross(e_perp, d_out));
    const Vec3 next = e_perp * (r_te * a_perp) + e_par_out * (r_tm * a_par);
    pol = norm(next) > 1e-300 ? normalized(next) : initial_polarization(d_out);
    return power_db(factor);
}

double diffraction_loss(const Wedge &w, const Vec3 &source, const Vec3 &q, const Vec3 &observation, double f_ghz,
                        Vec3 &pol)
{
    const EdgeCoordinates c = edge_coordinates(w, source, q, observation);
    const double sin_b0 = std::sin(c.beta0);
    const double l = c.s * c.s_prime * sin_b0 * sin_b0 / (c.s + c.s_prime);
    const DiffractionCoefficients d =
        utd_coefficients(w.n(), c.phi_prime, c.phi, l, c.beta0, wavenumber(f_ghz), w.materials, f_ghz);

    const Vec3 s_in = normalized(q - source);
    const Vec3 s_out = normalized(observation - q);
    const Vec3 phi_in = normalized(cross(w.direction, s_in));
    const Vec3 beta_in = cross(phi_in, s_in);
    const Vec3 phi_out = normalized(cross(w.direction, s_out));
    const Vec3 beta_out = cross(phi_out, s_out);
    const double a_beta = dot(pol, beta_in);
    const double a_phi = dot(pol, phi_in);
    const double ds = std::abs(d.soft);
    const double dh = std::abs(d.hard);
    const double factor = a_beta * a_beta * ds * ds + a_phi * a_phi * dh * dh;
    const Vec3 next = beta_out * (ds * a_beta) + phi_out * (dh * a_phi);
    pol = norm(next) > 1e-300 ? normalized(next) : initial_polarization(s_out);
    return std::max(0.0, power_db(factor * (c.s + c.s_prime) / (c.s * c.s_prime)));
}

struct PathEvaluator
{
    const Geometry &geometry;
    const RtConfig &cfg;

    std::optional<PropagationPath> direct(const Vec3 &tx, const Vec3 &rx) const
    {
        const SegmentTransmission st = segment_transmission(geometry, tx, rx, kLegTolerance);
        if (st.blocked)
            return std::nullopt;
        PropagationPath path;
        for (const auto &c : st.chords)
            path.interactions.push_back({InteractionKind::transmission, c.facet, c.entry, c.loss_db, c.length});
        path.length = distance(tx, rx);
        path.departure = normalized(rx - tx);
        path.arrival = normalized(tx - rx);
        path.gain_db = path_gain(path, cfg.frequency_ghz);
        return path;
    }

    // Signature decoded once, with the transmitter images that do not depend on the receiver.
    struct Decoded
    {
        Signature sig = 0;
        int n = 0;
        int dpos = -1;
        std::array<Event, kMaxEvents> ev{};
        std::array<Vec3, kMaxEvents + 1> img{}; // tx imaged through the reflections before the edge (or all)
    };

    Decoded decode(const Vec3 &tx, Signature sig) const
    {
        Decoded d;
        d.sig = sig;
        d.n = sig_size(sig);
        for (int i = 0; i < d.n; ++i)
        {
            d.ev[i] = sig_event(sig, i);
            if (d.ev[i].diffraction)
                d.dpos = i;
        }
        const int prefix = d.dpos < 0 ? d.n : d.dpos;
        d.img[0] = tx;
        for (int j = 0; j < prefix; ++j)
            d.img[j + 1] = mirror_point(d.img[j], geometry.facet(d.ev[j].id));
        return d;
    }

    std::optional<PropagationPath> evaluate(const Vec3 &tx, const Vec3 &rx, Signature sig, double floor_db) const
    {
        return evaluate(decode(tx, sig), rx, floor_db);
    }

    // Exact path for a signature; floor_db drops diffracted candidates before the visibility tests.
    std::optional<PropagationPath> evaluate(const Decoded &dec, const Vec3 &rx, double floor_db) const
    {
        const int n = dec.n;
        const int dpos = dec.dpos;
        const auto &ev = dec.ev;
        const auto &img = dec.img;
        const int prefix = dpos < 0 ? n : dpos;
        std::array<Vec3, kMaxEvents + 2> pts_storage{};
        std::span<Vec3> pts(pts_storage.data(), n + 2);
        pts[0] = img[0];
        pts[n + 1] = rx;

        Vec3 source_image = img[0];
        Vec3 observer_image = rx;
        if (dpos >= 0)
        {
            const Wedge &w = geometry.wedge(ev[dpos].id);
            std::array<Vec3, kMaxEvents + 1> rimg{};
            rimg[n] = rx;
            for (int j = n - 1; j > dpos; --j)
                rimg[j] = mirror_point(rimg[j + 1], geometry.facet(ev[j].id));
            source_image = img[prefix];
            observer_image = rimg[dpos + 1];

            // Unfolding both points about the edge line gives the Keller point directly; use it to skip
            // receivers whose diffraction point falls off the edge before refining it.
            const double a = dot(source_image - w.start, w.direction);
            const double b = dot(observer_image - w.start, w.direction);
            const double ra = norm(source_image - (w.start + w.direction * a));
            const double rb = norm(observer_image - (w.start + w.direction * b));
            if (ra + rb < 1e-12)
                return std::nullopt;
            const double estimate = a + (b - a) * ra / (ra + rb);
            const double margin = 1e-3 * w.length() + 1e-6;
            if (estimate < -margin || estimate > w.length() + margin)
                return std::nullopt;

            if (!in_exterior(w, source_image) || !in_exterior(w, observer_image))
                return std::nullopt;

            const double t = golden_edge_point(w, source_image, observer_image);
            if (!(t > kGoldenTolerance && t < w.length() - kGoldenTolerance))
                return std::nullopt;
            const Vec3 q = w.start + w.direction * t;
            const Vec3 d_in = q - source_image;
            const Vec3 d_out = observer_image - q;
            if (norm(d_in) < 1e-9 || norm(d_out) < 1e-9)
                return std::nullopt;
            const double b_in = std::acos(std::clamp(dot(normalized(d_in), w.direction), -1.0, 1.0));
            const double b_out = std::acos(std::clamp(dot(normalized(d_out), w.direction), -1.0, 1.0));
            if (std::abs(b_in - b_out) > kKellerTolerance)
                return std::nullopt;
            pts[dpos + 1] = q;
            Vec3 prev = q;
            for (int j = dpos + 1; j < n; ++j)
            {
                const auto p = plane_crossing(prev, rimg[j], geometry.facet(ev[j].id));
                if (!p)
                    return std::nullopt;
                pts[j + 1] = *p;
                prev = *p;
            }
        }

        Vec3 target = dpos >= 0 ? pts[dpos + 1] : rx;
        for (int j = prefix - 1; j >= 0; --j)
        {
            const auto p = plane_crossing(img[j + 1], target, geometry.facet(ev[j].id));
            if (!p)
                return std::nullopt;
            pts[j + 1] = *p;
            target = *p;
        }

        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            if (distance(pts[i], pts[i + 1]) < 1e-9)
                return std::nullopt;

        // Both legs must meet a reflecting facet on its exterior side (either side of a thin sheet).
        for (int j = 0; j < n; ++j)
        {
            if (ev[j].diffraction)
                continue;
            const Facet &f = geometry.facet(ev[j].id);
            const double sp = dot(pts[j] - pts[j + 1], f.normal);
            const double sn = dot(pts[j + 2] - pts[j + 1], f.normal);
            if (f.two_sided ? !(sp * sn > 0.0) : !(sp > 1e-12 && sn > 1e-12))
                return std::nullopt;
        }

        PropagationPath path;
        path.departure = normalized(pts[1] - pts[0]);
        path.arrival = normalized(pts[n] - pts[n + 1]);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            path.length += distance(pts[i], pts[i + 1]);

        std::array<double, kMaxEvents> event_loss{};
        Vec3 pol = initial_polarization(path.departure);
        try
        {
            for (int j = 0; j < n; ++j)
            {
                const Vec3 d_in = normalized(pts[j + 1] - pts[j]);
                const Vec3 d_out = normalized(pts[j + 2] - pts[j + 1]);
                if (ev[j].diffraction)
                    event_loss[j] = diffraction_loss(geometry.wedge(ev[j].id), source_image, pts[j + 1],
                                                     observer_image, cfg.frequency_ghz, pol);
                else
                    event_loss[j] = reflection_loss(geometry.facet_material(ev[j].id), d_in, d_out,
                                                    geometry.facet(ev[j].id).normal, cfg.frequency_ghz, pol);
            }
        }
        catch (const GeometryError &)
        {
            return std::nullopt;
        }

        if (dpos >= 0)
        {
            double estimate = -fspl_db(path.length, cfg.frequency_ghz);
            for (int j = 0; j < n; ++j)
                estimate -= event_loss[j];
            if (estimate < floor_db)
                return std::nullopt;
        }

        for (int leg = 0; leg <= n; ++leg)
        {
            const Vec3 &a = pts[leg];
            const Vec3 &b = pts[leg + 1];
            if (dpos >= 0)
            {
                if (geometry.segment_blocked(a, b, kLegTolerance))
                    return std::nullopt;
            }
            else
            {
                const SegmentTransmission st = segment_transmission(geometry, a, b, kLegTolerance);
                if (st.blocked)
                    return std::nullopt;
                for (const auto &c : st.chords)
                    path.interactions.push_back(
                        {InteractionKind::transmission, c.facet, c.entry, c.loss_db, c.length});
            }
            if (leg < n)
                path.interactions.push_back({ev[leg].diffraction ? InteractionKind::diffraction
                                                                 : InteractionKind::reflection,
                                             ev[leg].id, b, event_loss[leg], 0.0});
        }
        path.gain_db = path_gain(path, cfg.frequency_ghz);
        return path;
    }
};

double linear_sum_db(const std::vector<double> &db)
{
    double sum = 0.0;
    for (double v : db)
        sum += std::pow(10.0, v / 10.0);
    return sum > 0.0 ? 10.0 * std::log10(sum) : kNoCoverage;
}

} // namespace

void RtConfig::validate() const
{
    if (max_reflections < 0 || max_reflections > 2)
        throw ValidationError("rt: max_reflections must be in [0, 2]");
    if (max_diffractions < 0 || max_diffractions > 1)
        throw ValidationError("rt: max_diffractions must be 0 or 1");
    if (launch_count < 100)
        throw ValidationError("rt: launch_count must be at least 100");
    if (!(frequency_ghz > 0.0) || !std::isfinite(frequency_ghz))
        throw ValidationError("rt: frequency must be positive");
    if (!(reception_sphere_alpha > 0.0) || !std::isfinite(reception_sphere_alpha))
        throw ValidationError("rt: reception_sphere_alpha must be positive");
    if (diffraction_launch_count < 16)
        throw ValidationError("rt: diffraction_launch_count must be at least 16");
    if (!(discovery_loss_cap_db >= 0.0))
        throw ValidationError("rt: discovery_loss_cap_db must be non-negative");
    if (!(diffraction_prune_db >= 0.0))
        throw ValidationError("rt: diffraction_prune_db must be non-negative");
}

std::string to_string(InteractionKind kind)
{
    switch (kind)
    {
    case InteractionKind::reflection:
        return "reflection";
    case InteractionKind::diffraction:
        return "diffraction";
    case InteractionKind::transmission:
        return "transmission";
    }
    return "reflection";
}

std::string PropagationPath::signature() const
{
    std::ostringstream os;
    bool first = true;
    for (const auto &i : interactions)
    {
        if (i.kind == InteractionKind::transmission)
            continue;
        os << (first ? "" : " ") << (i.kind == InteractionKind::reflection ? 'R' : 'D') << i.id;
        first = false;
    }
    return os.str();
}

int PropagationPath::reflection_count() const
{
    return static_cast<int>(std::count_if(interactions.begin(), interactions.end(),
                                          [](const Interaction &i) { return i.kind == InteractionKind::reflection; }));
}

int PropagationPath::diffraction_count() const
{
    return static_cast<int>(std::count_if(interactions.begin(), interactions.end(),
                                          [](const Interaction &i) { return i.kind == InteractionKind::diffraction; }));
}

double fspl_db(double distance_m, double frequency_ghz)
{
    if (!(distance_m > 0.0) || !(frequency_ghz > 0.0))
        throw DomainError("fspl: distance and frequency must be positive");
    return 20.0 * std::log10(4.0 * M_PI * distance_m * frequency_ghz * 1e9 / kSpeedOfLight);
}

double path_gain(const PropagationPath &path, double frequency_ghz)
{
    double gain = -fspl_db(path.length, frequency_ghz);
    for (const auto &i : path.interactions)
        gain -= i.loss_db;
    return gain;
}

double aggregate_rx_power(const std::vector<PropagationPath> &paths, const AntennaPattern &tx_antenna,
                          const AntennaPattern &rx_antenna, double tx_power_dbm)
{
    std::vector<double> powers;
    powers.reserve(paths.size());
    for (const auto &p : paths)
        powers.push_back(tx_power_dbm + antenna_gain(tx_antenna, p.departure) + p.gain_db +
                         antenna_gain(rx_antenna, p.arrival));
    return linear_sum_db(powers);
}

double aggregate_gain(const std::vector<PropagationPath> &paths)
{
    std::vector<double> gains;
    gains.reserve(paths.size());
    for (const auto &p : paths)
        gains.push_back(p.gain_db);
    return linear_sum_db(gains);
}

double apply_tuning(double rxp_untuned_dbm, double d3d_m, const TuningParams &tuning)
{
    if (!(d3d_m > 0.0))
        throw DomainError("apply_tuning: distance must be positive");
    return rxp_untuned_dbm - tuning.A - (tuning.B - 20.0) * std::log10(d3d_m);
}

std::vector<std::vector<PropagationPath>> trace_many(const Geometry &geometry, const Vec3 &tx,
                                                     const std::vector<Vec3> &receivers, const RtConfig &cfg)
{
    cfg.validate();
    for (const auto &rx : receivers)
        if (distance(tx, rx) < 1e-9)
            throw GeometryError("trace: transmitter and receiver coincide");
    if (geometry.facets().size() >= kDiffractionFlag - 1 || geometry.wedges().size() >= kDiffractionFlag - 1)
        throw GeometryError("trace: scene has too many facets or wedges");

    const ReceiverIndex index(receivers);
    Aabb extent = geometry.bounds();
    extent.expand(tx);
    for (const auto &rx : receivers)
        extent.expand(rx);
    const Tracer tracer{geometry, index, cfg, extent.center(), norm(extent.extent())};
    const unsigned threads = std::max(1u, cfg.threads);

    const std::vector<Vec3> directions = fibonacci_sphere(cfg.launch_count);
    const double radius_factor =
        cfg.reception_sphere_alpha * std::sqrt(4.0 * M_PI / static_cast<double>(cfg.launch_count));

    std::vector<Discovery> found(threads);
    for (auto &d : found)
        d.captures.resize(receivers.size());
    const bool any_interactions = cfg.max_reflections > 0 || cfg.max_diffractions > 0;
    if (any_interactions && !geometry.facets().empty())
    {
        parallel_for(directions.size(), threads, [&](std::size_t begin, std::size_t end, unsigned worker) {
            std::vector<Ray> stack;
            for (std::size_t i = begin; i < end; ++i)
            {
                Ray ray;
                ray.origin = tx;
                ray.dir = directions[i];
                tracer.run(ray, i, radius_factor, false, 1, found[worker], stack);
            }
        });
    }

    std::map<RegistrationKey, Registration> registrations;
    for (auto &d : found)
        for (const auto &[key, reg] : d.registrations)
        {
            auto [it, inserted] = registrations.try_emplace(key, reg);
            if (!inserted && reg.rank < it->second.rank)
                it->second = reg;
        }

    // Reflections after the edge, found by launching from each registered diffraction point.
    std::vector<std::pair<RegistrationKey, Registration>> launch_points;
    for (const auto &entry : registrations)
    {
        int refl = 0;
        for (int i = 0; i < sig_size(entry.first.second); ++i)
            refl += sig_event(entry.first.second, i).diffraction ? 0 : 1;
        if (refl < cfg.max_reflections && sig_size(entry.first.second) + 2 <= kMaxEvents)
            launch_points.push_back(entry);
    }
    std::vector<Discovery> secondary(threads);
    for (auto &d : secondary)
        d.captures.resize(receivers.size());
    if (!launch_points.empty())
    {
        const std::vector<Vec3> edge_dirs = fibonacci_sphere(cfg.diffraction_launch_count);
        const double edge_radius =
            cfg.reception_sphere_alpha * std::sqrt(4.0 * M_PI / static_cast<double>(cfg.diffraction_launch_count));
        parallel_for(launch_points.size(), threads, [&](std::size_t begin, std::size_t end, unsigned worker) {
            std::vector<Ray> stack;
            for (std::size_t i = begin; i < end; ++i)
            {
                const auto &[key, reg] = launch_points[i];
                const Wedge &w = geometry.wedge(key.first);
                const Signature sig = sig_push(key.second, {true, key.first});
                const int prefix_size = sig_size(key.second);
                int refl = prefix_size;
                const double half = 0.5 * w.exterior_angle;
                const Vec3 bisector = w.face_a_tangent * std::cos(half) + w.face_a_normal * std::sin(half);
                for (const auto &u : edge_dirs)
                {
                    const Vec3 v = u - w.direction * dot(u, w.direction);
                    if (norm(v) < 1e-9)
                        continue;
                    double phi = std::atan2(dot(v, w.face_a_normal), dot(v, w.face_a_tangent));
                    if (phi < 0.0)
                        phi += 2.0 * M_PI;
                    if (!(phi > 1e-9 && phi < w.exterior_angle - 1e-9))
                        continue;
                    Ray ray;
                    ray.origin = reg.point + bisector * kSelfIntersectionOffset;
                    ray.dir = u;
                    ray.sig = sig;
                    ray.reflections = refl;
                    tracer.run(ray, i, edge_radius, true, prefix_size + 2, secondary[worker], stack);
                }
            }
        });
    }

    const PathEvaluator evaluator{geometry, cfg};
    std::vector<Signature> edge_sigs;
    for (const auto &[key, reg] : registrations)
        edge_sigs.push_back(sig_push(key.second, {true, key.first}));
    std::sort(edge_sigs.begin(), edge_sigs.end());
    std::vector<PathEvaluator::Decoded> edge_decoded;
    edge_decoded.reserve(edge_sigs.size());
    for (Signature sig : edge_sigs)
        edge_decoded.push_back(evaluator.decode(tx, sig));

    std::vector<std::vector<PropagationPath>> out(receivers.size());
    parallel_for(receivers.size(), threads, [&](std::size_t begin, std::size_t end, unsigned) {
        for (std::size_t r = begin; r < end; ++r)
        {
            const Vec3 &rx = receivers[r];
            std::vector<PropagationPath> &paths = out[r];
            if (auto p = evaluator.direct(tx, rx))
                paths.push_back(std::move(*p));

            // Captured diffraction signatures carry a reflection after the edge, so they never coincide
            // with the registered ones.
            std::vector<Signature> captured;
            for (auto *group : {&found, &secondary})
                for (const auto &d : *group)
                    captured.insert(captured.end(), d.captures[r].begin(), d.captures[r].end());
            std::sort(captured.begin(), captured.end());
            captured.erase(std::unique(captured.begin(), captured.end()), captured.end());

            std::vector<Signature> edge_suffixed;
            for (Signature sig : captured)
            {
                bool has_d = false;
                for (int i = 0; i < sig_size(sig); ++i)
                    has_d = has_d || sig_event(sig, i).diffraction;
                if (has_d)
                    edge_suffixed.push_back(sig);
                else if (auto p = evaluator.evaluate(tx, rx, sig, kNoCoverage))
                    paths.push_back(std::move(*p));
            }

            const double floor_db = std::isfinite(cfg.diffraction_prune_db) && !paths.empty()
                                        ? aggregate_gain(paths) - cfg.diffraction_prune_db
                                        : kNoCoverage;
            // Both lists are sorted; merge them into signature order.
            std::size_t e = 0;
            std::size_t k = 0;
            while (e < edge_decoded.size() || k < edge_suffixed.size())
            {
                std::optional<PropagationPath> p;
                if (k == edge_suffixed.size() || (e < edge_decoded.size() && edge_decoded[e].sig < edge_suffixed[k]))
                    p = evaluator.evaluate(edge_decoded[e++], rx, floor_db);
                else
                    p = evaluator.evaluate(tx, rx, edge_suffixed[k++], floor_db);
                if (p)
                    paths.push_back(std::move(*p));
            }
        }
    });
    return out;
}

std::vector<PropagationPath> trace_paths(const Geometry &geometry, const Vec3 &tx, const Vec3 &rx,
                                         const RtConfig &cfg)
{
    return std::move(trace_many(geometry, tx, {rx}, cfg).front());
}

std::vector<PropagationPath> trace_paths(const Scene &scene, const Node &tx, const Node &rx, const RtConfig &cfg)
{
    const Geometry geometry(scene);
    return trace_paths(geometry, tx.position, rx.position, cfg);
}

std::vector<double> predict_rx_power(const Geometry &geometry, const Vec3 &tx, const std::vector<Vec3> &receivers,
                                     const RtConfig &cfg, const TuningParams &tuning, const RadioLink &link)
{
    const auto paths = trace_many(geometry, tx, receivers, cfg);
    std::vector<double> out(receivers.size(), kNoCoverage);
    for (std::size_t i = 0; i < receivers.size(); ++i)
    {
        const double p = aggregate_rx_power(paths[i], link.tx_antenna, link.rx_antenna, link.tx_power_dbm);
        out[i] = std::isfinite(p) ? apply_tuning(p, distance(tx, receivers[i]), tuning) : kNoCoverage;
    }
    return out;
}

CoverageGrid predict_grid(const Geometry &geometry, const Vec3 &tx, const GridSpec &grid, const RtConfig &cfg,
                          const TuningParams &tuning)
{
    CoverageGrid out(grid);
    const auto points = out.points();
    const auto paths = trace_many(geometry, tx, points, cfg);
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        const double g = aggregate_gain(paths[i]);
        out.values[i] = std::isfinite(g) ? apply_tuning(g, distance(tx, points[i]), tuning) : kNoCoverage;
    }
    return out;
}

CoverageGrid predict_grid(const Scene &scene, const Node &tx, const GridSpec &grid, const RtConfig &cfg,
                          const TuningParams &tuning)
{
    const Geometry geometry(scene);
    return predict_grid(geometry, tx.position, grid, cfg, tuning);
}

nlohmann::json paths_to_json(const std::vector<PropagationPath> &paths, const Geometry &geometry)
{
    auto vec = [](const Vec3 &v) { return nlohmann::json::array({v.x, v.y, v.z}); };
    nlohmann::json out = nlohmann::json::array();
    for (const auto &p : paths)
    {
        nlohmann::json interactions = nlohmann::json::array();
        for (const auto &i : p.interactions)
        {
            nlohmann::json j;
            j["kind"] = to_string(i.kind);
            j["id"] = i.id;
            if (i.kind == InteractionKind::diffraction)
                j["solid"] = geometry.solids()[geometry.wedge(i.id).solid].id;
            else
                j["solid"] = geometry.solids()[geometry.facet(i.id).solid].id;
            j["point"] = vec(i.point);
            j["loss_db"] = i.loss_db;
            if (i.kind == InteractionKind::transmission)
                j["chord_m"] = i.chord_m;
            interactions.push_back(std::move(j));
        }
        nlohmann::json j;
        j["signature"] = p.signature();
        j["interactions"] = std::move(interactions);
        j["length_m"] = p.length;
        j["gain_db"] = p.gain_db;
        j["departure"] = vec(p.departure);
        j["arrival"] = vec(p.arrival);
        out.push_back(std::move(j));
    }
    return out;
}

} // namespace rfplan
