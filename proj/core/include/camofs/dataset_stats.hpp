#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "camofs/annotations.hpp"

namespace camofs {

// Images bucketed by how many instances they contain. counts covers only
// annotated images; ratios are recomputed percentages of annotated images.
struct InstanceHistogram {
    std::map<std::string, long> counts;    // keys "1", "2", "3", "3+"
    std::map<std::string, double> ratios;  // same keys, percentages
    long total_images = 0;
    long total_instances = 0;
    long annotated_images = 0;
};

InstanceHistogram instance_histogram(const AnnotationSet& set);
std::string histogram_to_json(const InstanceHistogram& h);
InstanceHistogram histogram_from_json(const std::string& text);

// Instance-center density over a G x G grid of normalized image
// coordinates. Centers are bbox centers; the bin index is
// floor(u * G) clamped to G-1, so a center exactly at the image midpoint
// lands in bin G/2 (not G/2 - 1).
struct CenterBiasGrid {
    int grid = 64;
    std::vector<long> bins;  // row-major grid x grid
    long total = 0;
};

CenterBiasGrid center_bias(const AnnotationSet& set, int grid = 64);
std::string center_bias_to_csv(const CenterBiasGrid& g);
CenterBiasGrid center_bias_from_csv(const std::string& text);

// "width,height" header plus one row per image, in input order.
std::string resolution_csv(const AnnotationSet& set);
std::vector<std::pair<int, int>> resolution_from_csv(const std::string& text);

}  // namespace camofs
