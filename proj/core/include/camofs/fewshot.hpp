#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "camofs/annotations.hpp"

namespace camofs {

// Shot selections are annotation ids keyed as shots[K][class_id]. For every
// class the K-shot list is a prefix of the (K+1)-shot list, so smaller
// benchmarks are strict subsets of larger ones.
struct FewShotSplit {
    std::set<int> base_classes;
    std::set<int> novel_classes;
    std::map<int, std::map<int, std::vector<std::int64_t>>> shots;
};

// Draws max_k annotations per novel class uniformly without replacement
// (all of them when fewer exist) with a per-class generator derived from
// (seed, class_id); shots[K] keeps the first K of each draw for every
// K in 1..max_k. Classes not in novel_classes become base classes.
// A novel class with no annotations is an error naming the class.
FewShotSplit build_nested_shots(const AnnotationSet& set, const std::set<int>& novel_classes,
                                int max_k = 5, std::uint64_t seed = 0);

// Annotation subset selected by shots[K], with the images they reference;
// the category list is kept whole so class ids stay resolvable.
AnnotationSet filter_to_shots(const AnnotationSet& set, const FewShotSplit& split, int k);

void export_split(const AnnotationSet& set, const FewShotSplit& split, int k,
                  const std::string& out_path);

}  // namespace camofs
