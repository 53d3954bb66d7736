#include "camofs/dataset_stats.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace camofs {

namespace {

const char* bucket_for(long n) {
    if (n == 1) return "1";
    if (n == 2) return "2";
    if (n == 3) return "3";
    return "3+";
}

}  // namespace

InstanceHistogram instance_histogram(const AnnotationSet& set) {
    InstanceHistogram h;
    h.counts = {{"1", 0}, {"2", 0}, {"3", 0}, {"3+", 0}};
    h.total_images = static_cast<long>(set.images.size());
    h.total_instances = static_cast<long>(set.annotations.size());

    std::map<std::int64_t, long> per_image;
    for (const Annotation& ann : set.annotations) ++per_image[ann.image_id];

    h.annotated_images = static_cast<long>(per_image.size());
    for (const auto& [image_id, n] : per_image) ++h.counts[bucket_for(n)];

    for (const auto& [key, count] : h.counts) {
        h.ratios[key] = h.annotated_images == 0
                            ? 0.0
                            : 100.0 * static_cast<double>(count) / static_cast<double>(h.annotated_images);
    }
    return h;
}

std::string histogram_to_json(const InstanceHistogram& h) {
    nlohmann::json j;
    j["counts"] = h.counts;
    j["ratios"] = h.ratios;
    j["total_images"] = h.total_images;
    j["total_instances"] = h.total_instances;
    j["annotated_images"] = h.annotated_images;
    return j.dump(2);
}

InstanceHistogram histogram_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    InstanceHistogram h;
    h.counts = j.at("counts").get<std::map<std::string, long>>();
    h.ratios = j.at("ratios").get<std::map<std::string, double>>();
    h.total_images = j.at("total_images").get<long>();
    h.total_instances = j.at("total_instances").get<long>();
    h.annotated_images = j.at("annotated_images").get<long>();
    return h;
}

CenterBiasGrid center_bias(const AnnotationSet& set, int grid) {
    if (grid < 1) throw std::invalid_argument("center_bias: grid must be >= 1");
    CenterBiasGrid g;
    g.grid = grid;
    g.bins.assign(static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid), 0);

    for (const Annotation& ann : set.annotations) {
        const ImageInfo* im = set.find_image(ann.image_id);
        if (!im || im->width <= 0 || im->height <= 0) {
            throw std::invalid_argument("center_bias: annotation " + std::to_string(ann.id) +
                                        " has no usable image extent");
        }
        const double u = (ann.bbox[0] + ann.bbox[2] / 2.0) / im->width;
        const double v = (ann.bbox[1] + ann.bbox[3] / 2.0) / im->height;
        const int col = std::clamp(static_cast<int>(u * grid), 0, grid - 1);
        const int row = std::clamp(static_cast<int>(v * grid), 0, grid - 1);
        ++g.bins[static_cast<std::size_t>(row) * grid + col];
        ++g.total;
    }
    return g;
}

std::string center_bias_to_csv(const CenterBiasGrid& g) {
    std::ostringstream out;
    for (int r = 0; r < g.grid; ++r) {
        for (int c = 0; c < g.grid; ++c) {
            if (c) out << ',';
            out << g.bins[static_cast<std::size_t>(r) * g.grid + c];
        }
        out << '\n';
    }
    return out.str();
}

CenterBiasGrid center_bias_from_csv(const std::string& text) {
    CenterBiasGrid g;
    g.grid = 0;
    std::istringstream in(text);
    std::string line;
    std::vector<long> bins;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        int cols = 0;
        while (std::getline(row, cell, ',')) {
            bins.push_back(std::stol(cell));
            ++cols;
        }
        if (g.grid == 0) g.grid = cols;
        if (cols != g.grid) throw std::invalid_argument("center grid rows have uneven lengths");
        ++rows;
    }
    if (rows != g.grid) throw std::invalid_argument("center grid is not square");
    g.bins = std::move(bins);
    for (long b : g.bins) g.total += b;
    return g;
}

std::string resolution_csv(const AnnotationSet& set) {
    std::ostringstream out;
    out << "width,height\n";
    for (const ImageInfo& im : set.images) {
        out << im.width << ',' << im.height << '\n';
    }
    return out.str();
}

std::vector<std::pair<int, int>> resolution_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "width,height") {
        throw std::invalid_argument("resolution csv must start with a width,height header");
    }
    std::vector<std::pair<int, int>> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("resolution row missing comma");
        out.emplace_back(std::stoi(line.substr(0, comma)), std::stoi(line.substr(comma + 1)));
    }
    return out;
}

}  // namespace camofs
