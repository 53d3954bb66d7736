#include "camofs/fewshot.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>

namespace camofs {

namespace {

// Uniform draw from [0, bound) by rejection, independent of the standard
// library's distribution internals so splits replay identically everywhere.
std::uint64_t bounded_uint(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % bound;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % bound;
}

}  // namespace

FewShotSplit build_nested_shots(const AnnotationSet& set, const std::set<int>& novel_classes,
                                int max_k, std::uint64_t seed) {
    if (max_k < 1) throw std::invalid_argument("build_nested_shots: max_k must be >= 1");
    for (int cid : novel_classes) {
        if (!set.find_category(cid)) {
            throw std::invalid_argument("build_nested_shots: unknown novel class " + std::to_string(cid));
        }
    }

    FewShotSplit split;
    split.novel_classes = novel_classes;
    for (const Category& cat : set.categories) {
        if (!novel_classes.count(cat.id)) split.base_classes.insert(cat.id);
    }

    // Candidate pools in ascending annotation-id order, so the draw depends
    // only on (seed, class_id) and the set of ids.
    std::map<int, std::vector<std::int64_t>> pools;
    for (const Annotation& ann : set.annotations) {
        if (novel_classes.count(ann.category_id)) pools[ann.category_id].push_back(ann.id);
    }
    for (auto& [cid, pool] : pools) std::sort(pool.begin(), pool.end());

    for (int cid : novel_classes) {
        auto it = pools.find(cid);
        if (it == pools.end() || it->second.empty()) {
            throw std::invalid_argument("build_nested_shots: class " + std::to_string(cid) +
                                        " has no annotated instances");
        }
        std::vector<std::int64_t>& pool = it->second;
        std::seed_seq ss{seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(cid))};
        std::mt19937_64 rng(ss);

        const std::size_t take = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(max_k));
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + bounded_uint(rng, pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        for (int k = 1; k <= max_k; ++k) {
            const std::size_t len = std::min<std::size_t>(take, static_cast<std::size_t>(k));
            split.shots[k][cid].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(len));
        }
    }
    return split;
}

AnnotationSet filter_to_shots(const AnnotationSet& set, const FewShotSplit& split, int k) {
    auto shot_it = split.shots.find(k);
    if (shot_it == split.shots.end()) {
        throw std::invalid_argument("filter_to_shots: no " + std::to_string(k) + "-shot selection");
    }
    std::set<std::int64_t> keep_annotations;
    for (const auto& [cid, ids] : shot_it->second) {
        keep_annotations.insert(ids.begin(), ids.end());
    }

    AnnotationSet out;
    out.categories = set.categories;
    std::set<std::int64_t> keep_images;
    for (const Annotation& ann : set.annotations) {
        if (keep_annotations.count(ann.id)) {
            out.annotations.push_back(ann);
            keep_images.insert(ann.image_id);
        }
    }
    for (const ImageInfo& im : set.images) {
        if (keep_images.count(im.id)) out.images.push_back(im);
    }
    out.validate();
    return out;
}

void export_split(const AnnotationSet& set, const FewShotSplit& split, int k,
                  const std::string& out_path) {
    save_annotations(filter_to_shots(set, split, k), out_path);
}

}  // namespace camofs
