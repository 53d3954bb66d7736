#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "camofs/mask_rle.hpp"

namespace camofs {

struct AnnotationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ImageInfo {
    std::int64_t id = 0;
    int width = 0;
    int height = 0;
    std::string file_name;
};

// Either a polygon list or a run-length mask; both empty means the
// annotation carries no segmentation. string_counts records whether an RLE
// arrived in compact char form so round trips preserve the representation.
struct Segmentation {
    std::vector<std::vector<double>> polygons;
    bool has_rle = false;
    bool string_counts = false;
    RunLengthMask rle;

    bool empty() const { return polygons.empty() && !has_rle; }
};

struct Annotation {
    std::int64_t id = 0;
    std::int64_t image_id = 0;
    int category_id = 0;
    std::array<double, 4> bbox{0, 0, 0, 0};  // x, y, w, h
    Segmentation segmentation;
    double area = 0.0;
    int iscrowd = 0;
};

struct Category {
    int id = 0;
    std::string name;
};

struct AnnotationSet {
    std::vector<ImageInfo> images;
    std::vector<Annotation> annotations;
    std::vector<Category> categories;

    const ImageInfo* find_image(std::int64_t id) const;
    const Category* find_category(int id) const;

    // Cross-reference and range checks; throws AnnotationError naming the
    // offending id.
    void validate() const;
};

AnnotationSet parse_annotations(const std::string& json_text);
AnnotationSet load_annotations(const std::string& path);
std::string dump_annotations(const AnnotationSet& set);
void save_annotations(const AnnotationSet& set, const std::string& path);

// Pixel mask for one annotation's segmentation on the given canvas.
std::vector<std::uint8_t> rasterize_segmentation(const Segmentation& seg, int canvas_h, int canvas_w);

}  // namespace camofs
