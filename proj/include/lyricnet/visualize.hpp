#pragma once

#include <string>
#include <vector>

#include "lyricnet/models.hpp"

namespace lyricnet {

// display-side view of one song's attention trace
struct VisualizationInput {
    std::vector<std::vector<std::string>> unit_tokens;  // words per unit; empty for segment breaks
    std::vector<Real> unit_weights;
    std::vector<std::vector<Real>> word_weights;
    std::string predicted_genre;
};

// unit indices ordered by descending weight, ties to the earlier unit, first k kept
std::vector<std::size_t> top_units(const std::vector<Real>& weights, std::size_t k);

// terminal rendering: unit weight left of each line, word backgrounds on a
// white-to-red ramp normalized to the song's heaviest word, trailing scale legend
std::string render_ansi(const VisualizationInput& in, const std::vector<std::size_t>& order);

// same content as one self-contained html document
std::string render_html(const VisualizationInput& in, const std::vector<std::size_t>& order);

// machine-readable sidecar carrying the raw weights exactly as the forward pass
// produced them, plus the rendering order
std::string weights_sidecar_json(const VisualizationInput& in, const std::vector<std::size_t>& order);

}  // namespace lyricnet
