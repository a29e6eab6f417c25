#include "vrss/telemetry.hpp"

#include <cmath>
#include <sstream>

namespace vrss {

namespace {

constexpr double kUnitTol = 1e-6;

bool near_unit(double n) { return std::fabs(n - 1.0) <= kUnitTol; }

void check_unit_vec(std::vector<std::string>& out, std::size_t idx, const char* name,
                    const Vec3& v) {
    if (!near_unit(v.norm())) {
        std::ostringstream os;
        os << "frame " << idx << ": non-unit " << name << " (|v|=" << v.norm() << ")";
        out.push_back(os.str());
    }
}

void check_openness(std::vector<std::string>& out, std::size_t idx, const char* name,
                    double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream os;
        os << "frame " << idx << ": " << name << " out of [0,1] (" << v << ")";
        out.push_back(os.str());
    }
}

}  // namespace

std::vector<std::string> validate_session(const Session& s) {
    std::vector<std::string> violations;

    if (!(s.rate_hz > 0.0)) violations.push_back("rate_hz must be positive");

    for (std::size_t i = 0; i < s.frames.size(); ++i) {
        const Frame& f = s.frames[i];
        if (f.eye.t != f.t || f.character.t != f.t) {
            std::ostringstream os;
            os << "frame " << i << ": eye/character timestamps not aligned to frame t";
            violations.push_back(os.str());
        }
        if (i > 0 && !(f.t > s.frames[i - 1].t)) {
            std::ostringstream os;
            os << "frame " << i << ": timestamp not strictly increasing";
            violations.push_back(os.str());
        }
        check_unit_vec(violations, i, "gaze_l", f.eye.gaze_l);
        check_unit_vec(violations, i, "gaze_r", f.eye.gaze_r);
        check_unit_vec(violations, i, "gaze_c", f.eye.gaze_c);
        check_openness(violations, i, "open_l", f.eye.open_l);
        check_openness(violations, i, "open_r", f.eye.open_r);
        if (!near_unit(f.character.quat.norm())) {
            std::ostringstream os;
            os << "frame " << i << ": non-unit quaternion (|q|=" << f.character.quat.norm()
               << ")";
            violations.push_back(os.str());
        }
        for (double v : {f.eye.open_l, f.eye.open_r, f.eye.pupil_l, f.eye.pupil_r,
                         f.character.pos.x, f.character.pos.y, f.character.pos.z}) {
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "frame " << i << ": non-finite field";
                violations.push_back(os.str());
                break;
            }
        }
    }

    const double t_first = s.frames.empty() ? 0.0 : s.frames.front().t;
    const double t_last = s.frames.empty() ? 0.0 : s.frames.back().t;
    for (std::size_t i = 0; i < s.pauses.size(); ++i) {
        const TimeInterval& p = s.pauses[i];
        if (!(p.end > p.start)) {
            std::ostringstream os;
            os << "pause " << i << ": empty or inverted interval";
            violations.push_back(os.str());
        }
        if (i > 0 && p.start < s.pauses[i - 1].end) {
            std::ostringstream os;
            os << "pause " << i << ": overlapping pauses";
            violations.push_back(os.str());
        }
        if (!s.frames.empty() && (p.start < t_first || p.end > t_last + 1.0 / s.rate_hz)) {
            std::ostringstream os;
            os << "pause " << i << ": outside session time span";
            violations.push_back(os.str());
        }
    }

    return violations;
}

}  // namespace vrss
