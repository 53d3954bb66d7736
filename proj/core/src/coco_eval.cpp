#include "camofs/coco_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace camofs {

namespace {

constexpr int kNumThresholds = 10;   // 0.50 : 0.05 : 0.95
constexpr int kNumRecallPoints = 101;
constexpr int kApMaxDets = 100;

double threshold_at(int t) { return 0.5 + 0.05 * t; }

// Area partitions indexed all / small / medium / large.
constexpr std::array<std::array<double, 2>, 4> kAreaRanges{{
    {0.0, 1e10},
    {0.0, 32.0 * 32.0},
    {32.0 * 32.0, 96.0 * 96.0},
    {96.0 * 96.0, 1e10},
}};

struct GtEntry {
    std::int64_t id = 0;
    double area = 0.0;
    const Annotation* ann = nullptr;
};

struct DetEntry {
    double score = 0.0;
    double area = 0.0;
    std::size_t input_index = 0;
    const DetectionRecord* rec = nullptr;
};

// Match bookkeeping for one (category, image) pair at one area range, with
// detections already score-sorted and capped at 100.
struct ImageEval {
    std::vector<double> det_scores;
    // per threshold, per detection: matched gt id (0 when unmatched), ignore flag
    std::vector<std::vector<std::int64_t>> det_matched;
    std::vector<std::vector<std::uint8_t>> det_ignored;
    int num_positives = 0;  // non-ignored ground truth
};

struct PrCurve {
    bool defined = false;                       // false when no positives exist
    std::vector<std::array<double, kNumRecallPoints>> precision;  // per threshold
    std::vector<double> recall;                                   // per threshold
};

// 101-point interpolated curve per threshold, replicating the reference
// accumulation: global score sort (stable), cumulative tp/fp excluding
// ignored detections, precision envelope, then searchsorted recall lookup.
PrCurve accumulate(const std::vector<const ImageEval*>& evals, int max_det) {
    PrCurve out;
    out.precision.assign(kNumThresholds, {});
    out.recall.assign(kNumThresholds, 0.0);

    long npig = 0;
    for (const ImageEval* e : evals) npig += e->num_positives;
    if (npig == 0) return out;
    out.defined = true;

    struct Ref {
        double score;
        std::size_t eval_idx;
        std::size_t det_idx;
    };
    std::vector<Ref> refs;
    for (std::size_t ei = 0; ei < evals.size(); ++ei) {
        const std::size_t nd = std::min<std::size_t>(evals[ei]->det_scores.size(),
                                                     static_cast<std::size_t>(max_det));
        for (std::size_t di = 0; di < nd; ++di) {
            refs.push_back({evals[ei]->det_scores[di], ei, di});
        }
    }
    std::stable_sort(refs.begin(), refs.end(),
                     [](const Ref& a, const Ref& b) { return a.score > b.score; });

    for (int t = 0; t < kNumThresholds; ++t) {
        std::vector<double> pr;
        std::vector<double> rc;
        pr.reserve(refs.size());
        rc.reserve(refs.size());
        long tp = 0, fp = 0;
        for (const Ref& ref : refs) {
            const ImageEval* e = evals[ref.eval_idx];
            const bool ignored = e->det_ignored[static_cast<std::size_t>(t)][ref.det_idx] != 0;
            if (ignored) continue;
            const bool matched = e->det_matched[static_cast<std::size_t>(t)][ref.det_idx] != 0;
            matched ? ++tp : ++fp;
            rc.push_back(static_cast<double>(tp) / static_cast<double>(npig));
            pr.push_back(static_cast<double>(tp) / (static_cast<double>(tp + fp) + 1e-16));
        }

        out.recall[static_cast<std::size_t>(t)] = rc.empty() ? 0.0 : rc.back();

        for (std::size_t i = pr.size(); i > 1; --i) {
            pr[i - 2] = std::max(pr[i - 2], pr[i - 1]);
        }
        auto& q = out.precision[static_cast<std::size_t>(t)];
        q.fill(0.0);
        for (int ri = 0; ri < kNumRecallPoints; ++ri) {
            const double want = ri / 100.0;
            const auto it = std::lower_bound(rc.begin(), rc.end(), want);
            if (it != rc.end()) q[static_cast<std::size_t>(ri)] = pr[static_cast<std::size_t>(it - rc.begin())];
        }
    }
    return out;
}

double mean_precision(const PrCurve& c) {
    if (!c.defined) return -1.0;
    double sum = 0.0;
    for (const auto& row : c.precision) {
        sum = std::accumulate(row.begin(), row.end(), sum);
    }
    return sum / (kNumThresholds * kNumRecallPoints);
}

double mean_precision_at(const PrCurve& c, int t) {
    if (!c.defined) return -1.0;
    const auto& row = c.precision[static_cast<std::size_t>(t)];
    return std::accumulate(row.begin(), row.end(), 0.0) / kNumRecallPoints;
}

double mean_recall(const PrCurve& c) {
    if (!c.defined) return -1.0;
    return std::accumulate(c.recall.begin(), c.recall.end(), 0.0) / kNumThresholds;
}

double mean_skipping_undefined(const std::vector<double>& xs) {
    double sum = 0.0;
    int n = 0;
    for (double x : xs) {
        if (x != -1.0) {
            sum += x;
            ++n;
        }
    }
    return n == 0 ? -1.0 : sum / n;
}

}  // namespace

double iou_bbox(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    if (a[2] < 0 || a[3] < 0 || b[2] < 0 || b[3] < 0) {
        throw std::invalid_argument("iou_bbox: negative box extent");
    }
    const double ix = std::max(0.0, std::min(a[0] + a[2], b[0] + b[2]) - std::max(a[0], b[0]));
    const double iy = std::max(0.0, std::min(a[1] + a[3], b[1] + b[3]) - std::max(a[1], b[1]));
    const double inter = ix * iy;
    const double uni = a[2] * a[3] + b[2] * b[3] - inter;
    return uni <= 0.0 ? 0.0 : inter / uni;
}

double iou_mask(const Segmentation& a, const Segmentation& b, int canvas_h, int canvas_w) {
    const auto ma = rasterize_segmentation(a, canvas_h, canvas_w);
    const auto mb = rasterize_segmentation(b, canvas_h, canvas_w);
    const std::int64_t uni = mask_union(ma, mb);
    return uni == 0 ? 0.0 : static_cast<double>(mask_intersection(ma, mb)) / static_cast<double>(uni);
}

EvalOutput evaluate(const AnnotationSet& gt, const std::vector<DetectionRecord>& dets,
                    IouType iou_type) {
    gt.validate();
    std::set<int> category_ids;
    for (const Category& cat : gt.categories) category_ids.insert(cat.id);
    for (const Annotation& ann : gt.annotations) {
        if (ann.iscrowd == 1) {
            throw std::invalid_argument("evaluate: crowd ground truth (annotation " +
                                        std::to_string(ann.id) + ") is not supported");
        }
    }
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const DetectionRecord& d = dets[i];
        if (!category_ids.count(d.category_id)) {
            throw std::invalid_argument("evaluate: detection references unknown category " +
                                        std::to_string(d.category_id));
        }
        if (!gt.find_image(d.image_id)) {
            throw std::invalid_argument("evaluate: detection references unknown image " +
                                        std::to_string(d.image_id));
        }
        if (!std::isfinite(d.score)) throw std::invalid_argument("evaluate: non-finite score");
        if (d.bbox[2] < 0 || d.bbox[3] < 0) {
            throw std::invalid_argument("evaluate: negative detection box extent");
        }
        if (iou_type == IouType::Segm && d.mask.empty()) {
            throw std::invalid_argument("evaluate: segmentation scoring needs a mask on every detection");
        }
    }

    EvalOutput out;
    std::vector<EvalResult> defined_rows;

    for (const Category& cat : gt.categories) {
        // Group this category's ground truth and detections by image.
        std::map<std::int64_t, std::vector<GtEntry>> gt_by_image;
        std::map<std::int64_t, std::vector<DetEntry>> det_by_image;
        for (const Annotation& ann : gt.annotations) {
            if (ann.category_id != cat.id) continue;
            gt_by_image[ann.image_id].push_back({ann.id, ann.area, &ann});
        }
        for (std::size_t i = 0; i < dets.size(); ++i) {
            const DetectionRecord& d = dets[i];
            if (d.category_id != cat.id) continue;
            double area = d.bbox[2] * d.bbox[3];
            if (iou_type == IouType::Segm) {
                const ImageInfo* im = gt.find_image(d.image_id);
                const auto m = rasterize_segmentation(d.mask, im->height, im->width);
                area = static_cast<double>(std::count(m.begin(), m.end(), std::uint8_t{1}));
            }
            det_by_image[d.image_id].push_back({d.score, area, i, &d});
        }

        std::set<std::int64_t> image_ids;
        for (const auto& [id, v] : gt_by_image) image_ids.insert(id);
        for (const auto& [id, v] : det_by_image) image_ids.insert(id);

        // evals[area][image]; matching reruns per area range because the
        // ignore partition changes.
        std::array<std::vector<ImageEval>, kAreaRanges.size()> evals;

        for (std::int64_t image_id : image_ids) {
            std::vector<GtEntry> gts = gt_by_image.count(image_id) ? gt_by_image[image_id]
                                                                   : std::vector<GtEntry>{};
            std::vector<DetEntry> dts = det_by_image.count(image_id) ? det_by_image[image_id]
                                                                     : std::vector<DetEntry>{};
            std::stable_sort(dts.begin(), dts.end(),
                             [](const DetEntry& a, const DetEntry& b) { return a.score > b.score; });
            if (dts.size() > kApMaxDets) dts.resize(kApMaxDets);

            const ImageInfo* im = gt.find_image(image_id);
            // IoU rows follow score order, columns follow input gt order.
            std::vector<std::vector<double>> ious(dts.size(), std::vector<double>(gts.size(), 0.0));
            for (std::size_t di = 0; di < dts.size(); ++di) {
                for (std::size_t gi = 0; gi < gts.size(); ++gi) {
                    ious[di][gi] = iou_type == IouType::Bbox
                                       ? iou_bbox(dts[di].rec->bbox, gts[gi].ann->bbox)
                                       : iou_mask(dts[di].rec->mask, gts[gi].ann->segmentation,
                                                  im->height, im->width);
                }
            }

            for (std::size_t a = 0; a < kAreaRanges.size(); ++a) {
                const auto& rng = kAreaRanges[a];

                std::vector<std::uint8_t> gt_ignored(gts.size(), 0);
                for (std::size_t gi = 0; gi < gts.size(); ++gi) {
                    gt_ignored[gi] = (gts[gi].area < rng[0] || gts[gi].area > rng[1]) ? 1 : 0;
                }
                // Non-ignored ground truth first, stable within each group.
                std::vector<std::size_t> gt_order(gts.size());
                std::iota(gt_order.begin(), gt_order.end(), std::size_t{0});
                std::stable_sort(gt_order.begin(), gt_order.end(),
                                 [&](std::size_t x, std::size_t y) {
                                     return gt_ignored[x] < gt_ignored[y];
                                 });

                ImageEval ev;
                ev.det_scores.reserve(dts.size());
                for (const DetEntry& d : dts) ev.det_scores.push_back(d.score);
                ev.det_matched.assign(kNumThresholds, std::vector<std::int64_t>(dts.size(), 0));
                ev.det_ignored.assign(kNumThresholds, std::vector<std::uint8_t>(dts.size(), 0));
                for (std::uint8_t ig : gt_ignored) {
                    if (!ig) ++ev.num_positives;
                }

                for (int t = 0; t < kNumThresholds; ++t) {
                    std::vector<std::int64_t> gt_matched(gts.size(), 0);
                    for (std::size_t di = 0; di < dts.size(); ++di) {
                        double best_iou = std::min(threshold_at(t), 1.0 - 1e-10);
                        std::ptrdiff_t best = -1;
                        for (std::size_t oi = 0; oi < gt_order.size(); ++oi) {
                            const std::size_t gi = gt_order[oi];
                            if (gt_matched[gi] != 0) continue;
                            // Once a real match exists, ignored candidates
                            // (sorted last) cannot improve on it.
                            if (best > -1 && !gt_ignored[static_cast<std::size_t>(best)] && gt_ignored[gi]) {
                                break;
                            }
                            if (ious[di][gi] < best_iou) continue;
                            best_iou = ious[di][gi];
                            best = static_cast<std::ptrdiff_t>(gi);
                        }
                        if (best == -1) continue;
                        const auto bi = static_cast<std::size_t>(best);
                        gt_matched[bi] = dts[di].rec->image_id + 1;  // any nonzero tag
                        ev.det_matched[static_cast<std::size_t>(t)][di] = gts[bi].id;
                        ev.det_ignored[static_cast<std::size_t>(t)][di] = gt_ignored[bi];
                    }
                    // Unmatched detections outside the area range do not
                    // count as false positives for this range.
                    for (std::size_t di = 0; di < dts.size(); ++di) {
                        if (ev.det_matched[static_cast<std::size_t>(t)][di] == 0 &&
                            (dts[di].area < rng[0] || dts[di].area > rng[1])) {
                            ev.det_ignored[static_cast<std::size_t>(t)][di] = 1;
                        }
                    }
                }
                evals[a].push_back(std::move(ev));
            }
        }

        std::array<std::vector<const ImageEval*>, kAreaRanges.size()> eval_ptrs;
        for (std::size_t a = 0; a < kAreaRanges.size(); ++a) {
            for (const ImageEval& ev : evals[a]) eval_ptrs[a].push_back(&ev);
        }

        const PrCurve all100 = accumulate(eval_ptrs[0], kApMaxDets);
        const PrCurve small100 = accumulate(eval_ptrs[1], kApMaxDets);
        const PrCurve medium100 = accumulate(eval_ptrs[2], kApMaxDets);
        const PrCurve large100 = accumulate(eval_ptrs[3], kApMaxDets);
        const PrCurve all1 = accumulate(eval_ptrs[0], 1);
        const PrCurve all10 = accumulate(eval_ptrs[0], 10);

        EvalResult r;
        r.ap = mean_precision(all100);
        r.ap50 = mean_precision_at(all100, 0);
        r.ap75 = mean_precision_at(all100, 5);
        r.ap_small = mean_precision(small100);
        r.ap_medium = mean_precision(medium100);
        r.ap_large = mean_precision(large100);
        r.ar1 = mean_recall(all1);
        r.ar10 = mean_recall(all10);
        r.ar_small = mean_recall(small100);
        r.ar_medium = mean_recall(medium100);
        r.ar_large = mean_recall(large100);
        out.per_category[cat.id] = r;
        defined_rows.push_back(r);
    }

    auto collect = [&](auto field) {
        std::vector<double> xs;
        for (const auto& [cid, r] : out.per_category) xs.push_back(r.*field);
        return mean_skipping_undefined(xs);
    };
    out.mean.ap = collect(&EvalResult::ap);
    out.mean.ap50 = collect(&EvalResult::ap50);
    out.mean.ap75 = collect(&EvalResult::ap75);
    out.mean.ap_small = collect(&EvalResult::ap_small);
    out.mean.ap_medium = collect(&EvalResult::ap_medium);
    out.mean.ap_large = collect(&EvalResult::ap_large);
    out.mean.ar1 = collect(&EvalResult::ar1);
    out.mean.ar10 = collect(&EvalResult::ar10);
    out.mean.ar_small = collect(&EvalResult::ar_small);
    out.mean.ar_medium = collect(&EvalResult::ar_medium);
    out.mean.ar_large = collect(&EvalResult::ar_large);
    return out;
}

namespace {

using nlohmann::json;

json result_to_json(const EvalResult& r) {
    return json{{"ap", r.ap},
                {"ap50", r.ap50},
                {"ap75", r.ap75},
                {"ap_small", r.ap_small},
                {"ap_medium", r.ap_medium},
                {"ap_large", r.ap_large},
                {"ar1", r.ar1},
                {"ar10", r.ar10},
                {"ar_small", r.ar_small},
                {"ar_medium", r.ar_medium},
                {"ar_large", r.ar_large}};
}

Segmentation parse_det_segmentation(const json& j) {
    Segmentation seg;
    if (j.is_null()) return seg;
    if (j.is_array()) {
        for (const auto& poly : j) seg.polygons.push_back(poly.get<std::vector<double>>());
        return seg;
    }
    if (j.is_object()) {
        const int h = j.at("size")[0].get<int>();
        const int w = j.at("size")[1].get<int>();
        seg.has_rle = true;
        if (j.at("counts").is_string()) {
            seg.string_counts = true;
            seg.rle = rle_from_string(j.at("counts").get<std::string>(), h, w);
        } else {
            seg.rle.height = h;
            seg.rle.width = w;
            seg.rle.counts = j.at("counts").get<std::vector<int>>();
        }
        return seg;
    }
    throw std::invalid_argument("detection has an unrecognized segmentation form");
}

}  // namespace

std::vector<DetectionRecord> parse_detections(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("detection JSON parse failure: ") + e.what());
    }
    if (!j.is_array()) throw std::invalid_argument("detections must be a JSON array");

    std::vector<DetectionRecord> dets;
    for (const auto& jd : j) {
        DetectionRecord d;
        d.image_id = jd.at("image_id").get<std::int64_t>();
        d.category_id = jd.at("category_id").get<int>();
        d.score = jd.at("score").get<double>();
        if (jd.contains("bbox")) {
            const auto bbox = jd.at("bbox").get<std::vector<double>>();
            if (bbox.size() != 4) throw std::invalid_argument("detection bbox must have 4 entries");
            std::copy(bbox.begin(), bbox.end(), d.bbox.begin());
        }
        if (jd.contains("segmentation")) d.mask = parse_det_segmentation(jd.at("segmentation"));
        dets.push_back(std::move(d));
    }
    return dets;
}

std::vector<DetectionRecord> load_detections(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open detection file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_detections(buf.str());
}

std::string dump_eval(const EvalOutput& out) {
    json j;
    j["mean"] = result_to_json(out.mean);
    j["per_category"] = json::object();
    for (const auto& [cid, r] : out.per_category) {
        j["per_category"][std::to_string(cid)] = result_to_json(r);
    }
    return j.dump(2);
}

}  // namespace camofs
