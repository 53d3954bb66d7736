#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "camofs/annotations.hpp"

namespace camofs {

enum class IouType { Bbox, Segm };

struct DetectionRecord {
    std::int64_t image_id = 0;
    int category_id = 0;
    double score = 0.0;
    std::array<double, 4> bbox{0, 0, 0, 0};  // x, y, w, h
    Segmentation mask;                       // required for segmentation scoring
};

// Metric bundle; -1 marks a value with no ground truth to define it.
struct EvalResult {
    double ap = -1.0;
    double ap50 = -1.0;
    double ap75 = -1.0;
    double ap_small = -1.0;
    double ap_medium = -1.0;
    double ap_large = -1.0;
    double ar1 = -1.0;
    double ar10 = -1.0;
    double ar_small = -1.0;
    double ar_medium = -1.0;
    double ar_large = -1.0;
};

struct EvalOutput {
    EvalResult mean;  // per-field mean over categories, skipping -1 entries
    std::map<int, EvalResult> per_category;
};

// Intersection over union of [x, y, w, h] boxes; 0 when the union is empty.
double iou_bbox(const std::array<double, 4>& a, const std::array<double, 4>& b);

// Pixel-set IoU after rasterizing both segmentations on the canvas.
double iou_mask(const Segmentation& a, const Segmentation& b, int canvas_h, int canvas_w);

// Average precision / average recall sweep over IoU thresholds
// 0.50:0.05:0.95 with 101-point interpolated precision, greedy score-ordered
// matching, area partitions at pixel areas 32^2 and 96^2, and detection caps
// of 100 for AP and the area recalls, 1 and 10 for AR1/AR10. Score ties keep
// input order. Ground truth marked iscrowd=1 is rejected.
EvalOutput evaluate(const AnnotationSet& gt, const std::vector<DetectionRecord>& dets,
                    IouType iou_type);

std::vector<DetectionRecord> parse_detections(const std::string& json_text);
std::vector<DetectionRecord> load_detections(const std::string& path);
std::string dump_eval(const EvalOutput& out);

}  // namespace camofs
