#include "normpipe/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace normpipe::report {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 40.0;
constexpr double kMarker = 4.0;

struct Rgb {
    int r, g, b;
};

constexpr Rgb kLow{0x3b, 0x4c, 0xc0};
constexpr Rgb kHigh{0xb4, 0x04, 0x26};

constexpr std::string_view kSourcePalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string category_color(const std::optional<Category>& c) {
    if (!c) return std::string(kMissingColor);
    switch (*c) {
        case Category::MCI: return "#1f77b4";
        case Category::Control: return "#ff7f0e";
        case Category::AD: return "#2ca02c";
    }
    return std::string(kMissingColor);
}

std::string gender_color(const std::optional<Gender>& g) {
    if (!g) return std::string(kMissingColor);
    return *g == Gender::Male ? "#2ca02c" : "#ff7f0e";
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

// Position on the gradient: linear on each side of `center`, which maps to 0.5.
double centered_position(double v, double lo, double center, double hi) {
    if (v <= center) return center > lo ? 0.5 * (v - lo) / (center - lo) : 0.5;
    return hi > center ? 0.5 + 0.5 * (v - center) / (hi - center) : 0.5;
}

}  // namespace

std::optional<ColorBy> parse_color_by(std::string_view s) {
    if (s == "category") return ColorBy::Category;
    if (s == "age") return ColorBy::Age;
    if (s == "gender") return ColorBy::Gender;
    if (s == "mmse") return ColorBy::Mmse;
    if (s == "source") return ColorBy::Source;
    return std::nullopt;
}

std::string gradient_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    auto mix = [t](int a, int b) { return static_cast<int>(std::lround(a + t * (b - a))); };
    return fmt::format("#{:02x}{:02x}{:02x}", mix(kLow.r, kHigh.r), mix(kLow.g, kHigh.g), mix(kLow.b, kHigh.b));
}

std::string render_scatter_svg(const embedlab::Projection2D& projection, std::string_view color_by) {
    auto field = parse_color_by(color_by);
    if (!field) throw ConfigError("unknown color_by field: " + std::string(color_by));
    return render_scatter_svg(projection, *field);
}

std::string render_scatter_svg(const embedlab::Projection2D& projection, ColorBy color_by) {
    const auto& pts = projection.points;
    if (pts.empty()) throw PreconditionError("render_scatter_svg: empty projection");

    double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
    for (const auto& p : pts) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    auto sx = [&](double x) {
        return xmax > xmin ? kMargin + (x - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin) : kWidth / 2;
    };
    auto sy = [&](double y) {
        return ymax > ymin ? kHeight - kMargin - (y - ymin) / (ymax - ymin) * (kHeight - 2 * kMargin) : kHeight / 2;
    };

    std::optional<int> age_lo, age_hi;
    std::map<std::string, std::string> source_colors;
    for (const auto& p : pts) {
        if (p.meta.age) {
            age_lo = std::min(age_lo.value_or(*p.meta.age), *p.meta.age);
            age_hi = std::max(age_hi.value_or(*p.meta.age), *p.meta.age);
        }
        source_colors.emplace(p.meta.source, "");
    }
    std::size_t next = 0;
    for (auto& [label, color] : source_colors) color = kSourcePalette[next++ % std::size(kSourcePalette)];

    auto color_of = [&](const embedlab::ProjectedPoint& p) -> std::string {
        switch (color_by) {
            case ColorBy::Category: return category_color(p.meta.category);
            case ColorBy::Gender: return gender_color(p.meta.gender);
            case ColorBy::Source: return source_colors.at(p.meta.source);
            case ColorBy::Mmse:
                if (!p.meta.mmse) return std::string(kMissingColor);
                return gradient_color(centered_position(*p.meta.mmse, 0.0, 24.0, 30.0));
            case ColorBy::Age: {
                if (!p.meta.age) return std::string(kMissingColor);
                const double lo = *age_lo, hi = *age_hi;
                return gradient_color(centered_position(*p.meta.age, lo, (lo + hi) / 2.0, hi));
            }
        }
        return std::string(kMissingColor);
    };

    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
        kWidth, kHeight);
    out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", kWidth, kHeight);
    for (const auto& p : pts) {
        const std::string color = color_of(p);
        const double x = sx(p.x), y = sy(p.y);
        const std::string title = xml_escape(p.id);
        if (p.meta.origin == Source::Real) {
            out += fmt::format(
                "<circle class=\"marker\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" fill=\"{}\"><title>{}</title></circle>\n",
                x, y, kMarker, color, title);
        } else {
            out += fmt::format(
                "<rect class=\"marker\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{}\" height=\"{}\" fill=\"{}\">"
                "<title>{}</title></rect>\n",
                x - kMarker, y - kMarker, 2 * kMarker, 2 * kMarker, color, title);
        }
    }
    out += "</svg>\n";
    return out;
}

}  // namespace normpipe::report
