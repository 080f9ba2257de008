#include "lyricnet/visualize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

namespace lyricnet {

namespace {

// white -> saturated red, t in [0,1]
struct Color {
    int r, g, b;
};

Color ramp(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const Color hi{178, 24, 43};
    return {static_cast<int>(std::lround(255 + t * (hi.r - 255))),
            static_cast<int>(std::lround(255 + t * (hi.g - 255))),
            static_cast<int>(std::lround(255 + t * (hi.b - 255)))};
}

double max_word_weight(const VisualizationInput& in) {
    double mx = 0;
    for (const auto& ws : in.word_weights) {
        for (Real w : ws) mx = std::max(mx, static_cast<double>(w));
    }
    return mx;
}

std::string html_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string format_weight(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", w);
    return buf;
}

}  // namespace

std::vector<std::size_t> top_units(const std::vector<Real>& weights, std::size_t k) {
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return weights[a] > weights[b];  // stable keeps the earlier unit on ties
    });
    if (order.size() > k) order.resize(k);
    return order;
}

std::string render_ansi(const VisualizationInput& in, const std::vector<std::size_t>& order) {
    const double mx = max_word_weight(in);
    std::string out;
    out += "predicted genre: " + in.predicted_genre + "\n\n";
    for (std::size_t u : order) {
        out += format_weight(static_cast<double>(in.unit_weights[u])) + "  ";
        const auto& tokens = in.unit_tokens[u];
        const auto& ws = in.word_weights[u];
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const double t = mx > 0 ? static_cast<double>(ws[i]) / mx : 0.0;
            const Color c = ramp(t);
            char esc[48];
            std::snprintf(esc, sizeof esc, "\x1b[30;48;2;%d;%d;%dm", c.r, c.g, c.b);
            if (i) out += " ";
            out += esc;
            out += tokens[i];
            out += "\x1b[0m";
        }
        out += "\n";
    }
    // scale legend from zero to the song's heaviest word
    out += "\nword weight scale: 0 ";
    for (int i = 0; i <= 10; ++i) {
        const Color c = ramp(i / 10.0);
        char esc[48];
        std::snprintf(esc, sizeof esc, "\x1b[48;2;%d;%d;%dm \x1b[0m", c.r, c.g, c.b);
        out += esc;
    }
    out += " " + format_weight(mx) + "\n";
    return out;
}

std::string render_html(const VisualizationInput& in, const std::vector<std::size_t>& order) {
    const double mx = max_word_weight(in);
    const Color hi = ramp(1.0);
    std::string out;
    out += "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n";
    out += "<title>attention weights</title>\n<style>\n";
    out += "body{font-family:monospace;margin:2em;}\n";
    out += ".line{margin:0.3em 0;}\n";
    out += ".uw{display:inline-block;width:5em;color:#555;}\n";
    out += ".w{padding:0 0.15em;border-radius:2px;}\n";
    out += ".legend{margin-top:1.5em;}\n";
    char bar[160];
    std::snprintf(bar, sizeof bar,
                  ".bar{display:inline-block;width:12em;height:1em;vertical-align:middle;"
                  "background:linear-gradient(to right,rgb(255,255,255),rgb(%d,%d,%d));"
                  "border:1px solid #999;}\n",
                  hi.r, hi.g, hi.b);
    out += bar;
    out += "</style>\n</head>\n<body>\n";
    out += "<p>predicted genre: <b>" + html_escape(in.predicted_genre) + "</b></p>\n";
    for (std::size_t u : order) {
        out += "<div class=\"line\"><span class=\"uw\">" +
               format_weight(static_cast<double>(in.unit_weights[u])) + "</span>";
        const auto& tokens = in.unit_tokens[u];
        const auto& ws = in.word_weights[u];
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const double t = mx > 0 ? static_cast<double>(ws[i]) / mx : 0.0;
            const Color c = ramp(t);
            char span[96];
            std::snprintf(span, sizeof span, " <span class=\"w\" style=\"background:rgb(%d,%d,%d)\">",
                          c.r, c.g, c.b);
            out += span;
            out += html_escape(tokens[i]) + "</span>";
        }
        out += "</div>\n";
    }
    out += "<div class=\"legend\">word weight scale: 0 <span class=\"bar\"></span> " +
           format_weight(mx) + "</div>\n";
    out += "</body>\n</html>\n";
    return out;
}

std::string weights_sidecar_json(const VisualizationInput& in, const std::vector<std::size_t>& order) {
    nlohmann::json j;
    j["predicted_genre"] = in.predicted_genre;
    j["unit_weights"] = in.unit_weights;
    j["word_weights"] = in.word_weights;
    j["rendered_units"] = order;
    return j.dump(2) + "\n";
}

}  // namespace lyricnet
