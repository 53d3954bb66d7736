#include "camofs/annotations.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace camofs {

namespace {

using nlohmann::json;

Segmentation parse_segmentation(const json& j, std::int64_t ann_id) {
    Segmentation seg;
    if (j.is_null()) return seg;
    if (j.is_array()) {
        if (j.empty()) return seg;
        for (const auto& poly : j) {
            if (!poly.is_array()) {
                throw AnnotationError("annotation " + std::to_string(ann_id) +
                                      ": polygon segmentation must be an array of arrays");
            }
            seg.polygons.push_back(poly.get<std::vector<double>>());
        }
        return seg;
    }
    if (j.is_object()) {
        const auto& size = j.at("size");
        if (!size.is_array() || size.size() != 2) {
            throw AnnotationError("annotation " + std::to_string(ann_id) +
                                  ": run-length size must be [height, width]");
        }
        const int h = size[0].get<int>();
        const int w = size[1].get<int>();
        const auto& counts = j.at("counts");
        seg.has_rle = true;
        if (counts.is_string()) {
            seg.string_counts = true;
            seg.rle = rle_from_string(counts.get<std::string>(), h, w);
        } else {
            seg.rle.height = h;
            seg.rle.width = w;
            seg.rle.counts = counts.get<std::vector<int>>();
        }
        return seg;
    }
    throw AnnotationError("annotation " + std::to_string(ann_id) + ": unrecognized segmentation form");
}

json dump_segmentation(const Segmentation& seg) {
    if (seg.has_rle) {
        json j;
        j["size"] = {seg.rle.height, seg.rle.width};
        if (seg.string_counts) {
            j["counts"] = rle_to_string(seg.rle);
        } else {
            j["counts"] = seg.rle.counts;
        }
        return j;
    }
    json j = json::array();
    for (const auto& poly : seg.polygons) j.push_back(poly);
    return j;
}

}  // namespace

const ImageInfo* AnnotationSet::find_image(std::int64_t id) const {
    for (const ImageInfo& im : images) {
        if (im.id == id) return &im;
    }
    return nullptr;
}

const Category* AnnotationSet::find_category(int id) const {
    for (const Category& cat : categories) {
        if (cat.id == id) return &cat;
    }
    return nullptr;
}

void AnnotationSet::validate() const {
    std::set<std::int64_t> image_ids;
    for (const ImageInfo& im : images) {
        if (!image_ids.insert(im.id).second) {
            throw AnnotationError("duplicate image id " + std::to_string(im.id));
        }
        if (im.width < 0 || im.height < 0) {
            throw AnnotationError("image " + std::to_string(im.id) + " has negative extent");
        }
    }
    std::set<int> category_ids;
    for (const Category& cat : categories) {
        if (!category_ids.insert(cat.id).second) {
            throw AnnotationError("duplicate category id " + std::to_string(cat.id));
        }
    }
    std::set<std::int64_t> annotation_ids;
    for (const Annotation& ann : annotations) {
        if (!annotation_ids.insert(ann.id).second) {
            throw AnnotationError("duplicate annotation id " + std::to_string(ann.id));
        }
        if (!image_ids.count(ann.image_id)) {
            throw AnnotationError("annotation " + std::to_string(ann.id) +
                                  " references missing image_id " + std::to_string(ann.image_id));
        }
        if (!category_ids.count(ann.category_id)) {
            throw AnnotationError("annotation " + std::to_string(ann.id) +
                                  " references missing category_id " + std::to_string(ann.category_id));
        }
        if (!(ann.bbox[2] >= 0.0) || !(ann.bbox[3] >= 0.0)) {
            throw AnnotationError("annotation " + std::to_string(ann.id) + " has negative bbox extent");
        }
        for (double v : ann.bbox) {
            if (!std::isfinite(v)) {
                throw AnnotationError("annotation " + std::to_string(ann.id) + " has non-finite bbox");
            }
        }
        if (!(ann.area >= 0.0)) {
            throw AnnotationError("annotation " + std::to_string(ann.id) + " has negative area");
        }
        if (ann.iscrowd != 0 && ann.iscrowd != 1) {
            throw AnnotationError("annotation " + std::to_string(ann.id) + " has iscrowd outside {0,1}");
        }
    }
}

AnnotationSet parse_annotations(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw AnnotationError(std::string("annotation JSON parse failure: ") + e.what());
    }

    AnnotationSet set;
    try {
        for (const auto& im : j.value("images", json::array())) {
            ImageInfo info;
            info.id = im.at("id").get<std::int64_t>();
            info.width = im.at("width").get<int>();
            info.height = im.at("height").get<int>();
            info.file_name = im.value("file_name", std::string{});
            set.images.push_back(std::move(info));
        }
        for (const auto& jc : j.value("categories", json::array())) {
            Category cat;
            cat.id = jc.at("id").get<int>();
            cat.name = jc.value("name", std::string{});
            set.categories.push_back(std::move(cat));
        }
        for (const auto& ja : j.value("annotations", json::array())) {
            Annotation ann;
            ann.id = ja.at("id").get<std::int64_t>();
            ann.image_id = ja.at("image_id").get<std::int64_t>();
            ann.category_id = ja.at("category_id").get<int>();
            const auto bbox = ja.at("bbox").get<std::vector<double>>();
            if (bbox.size() != 4) {
                throw AnnotationError("annotation " + std::to_string(ann.id) +
                                      ": bbox must have 4 entries");
            }
            std::copy(bbox.begin(), bbox.end(), ann.bbox.begin());
            if (ja.contains("segmentation")) {
                ann.segmentation = parse_segmentation(ja.at("segmentation"), ann.id);
            }
            ann.area = ja.value("area", 0.0);
            ann.iscrowd = ja.value("iscrowd", 0);
            set.annotations.push_back(std::move(ann));
        }
    } catch (const json::exception& e) {
        throw AnnotationError(std::string("annotation JSON has missing or mistyped fields: ") + e.what());
    }

    set.validate();
    return set;
}

AnnotationSet load_annotations(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AnnotationError("cannot open annotation file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_annotations(buf.str());
}

std::string dump_annotations(const AnnotationSet& set) {
    json j;
    j["images"] = json::array();
    for (const ImageInfo& im : set.images) {
        j["images"].push_back({{"id", im.id},
                               {"width", im.width},
                               {"height", im.height},
                               {"file_name", im.file_name}});
    }
    j["annotations"] = json::array();
    for (const Annotation& ann : set.annotations) {
        json ja = {{"id", ann.id},
                   {"image_id", ann.image_id},
                   {"category_id", ann.category_id},
                   {"bbox", std::vector<double>(ann.bbox.begin(), ann.bbox.end())},
                   {"area", ann.area},
                   {"iscrowd", ann.iscrowd}};
        ja["segmentation"] = dump_segmentation(ann.segmentation);
        j["annotations"].push_back(std::move(ja));
    }
    j["categories"] = json::array();
    for (const Category& cat : set.categories) {
        j["categories"].push_back({{"id", cat.id}, {"name", cat.name}});
    }
    return j.dump(2);
}

void save_annotations(const AnnotationSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw AnnotationError("cannot open output file: " + path);
    out << dump_annotations(set) << '\n';
    if (!out) throw AnnotationError("failed writing annotation file: " + path);
}

std::vector<std::uint8_t> rasterize_segmentation(const Segmentation& seg, int canvas_h, int canvas_w) {
    if (seg.has_rle) {
        if (seg.rle.height != canvas_h || seg.rle.width != canvas_w) {
            throw std::invalid_argument("run-length mask size does not match canvas");
        }
        return rle_decode(seg.rle);
    }
    if (seg.polygons.empty()) {
        return std::vector<std::uint8_t>(static_cast<std::size_t>(canvas_h) * canvas_w, 0);
    }
    return rasterize_polygons(seg.polygons, canvas_h, canvas_w);
}

}  // namespace camofs
