// camofs: few-shot sampling, COCO-style evaluation, dataset statistics,
// a synthetic-feature trainer, and a gradient checker behind one binary.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "camofs/annotations.hpp"
#include "camofs/coco_eval.hpp"
#include "camofs/composite_loss.hpp"
#include "camofs/dataset_stats.hpp"
#include "camofs/fewshot.hpp"
#include "camofs/gradcheck.hpp"
#include "camofs/toy_trainer.hpp"

namespace {

std::string default_annotation_path() {
    const char* env = std::getenv("CAMOFS_ANN");
    return env ? std::string(env) : std::string();
}

std::set<int> parse_class_list(const std::string& text) {
    std::set<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        int value = std::stoi(item, &used);
        if (used != item.size()) throw std::invalid_argument("bad class id: " + item);
        out.insert(value);
    }
    if (out.empty()) throw std::invalid_argument("no class ids in --novel-classes");
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content << '\n';
    } else {
        write_file(out_path, content);
    }
}

int cmd_sample(const std::string& ann_path, const std::string& novel_list, int shots,
               std::uint64_t seed, const std::string& out_path) {
    auto set = camofs::load_annotations(ann_path);
    auto novel = parse_class_list(novel_list);
    int max_k = std::max(5, shots);
    auto split = camofs::build_nested_shots(set, novel, max_k, seed);
    camofs::export_split(set, split, shots, out_path);
    return 0;
}

int cmd_eval(const std::string& ann_path, const std::string& dets_path,
             const std::string& iou_type, const std::string& out_path) {
    auto gt = camofs::load_annotations(ann_path);
    auto dets = camofs::load_detections(dets_path);
    camofs::IouType type;
    if (iou_type == "bbox") {
        type = camofs::IouType::Bbox;
    } else if (iou_type == "segm") {
        type = camofs::IouType::Segm;
    } else {
        throw std::invalid_argument("--iou-type must be bbox or segm, got " + iou_type);
    }
    auto result = camofs::evaluate(gt, dets, type);
    emit(out_path, camofs::dump_eval(result));
    return 0;
}

int cmd_stats(const std::string& ann_path, const std::string& out_dir) {
    auto set = camofs::load_annotations(ann_path);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    auto histogram = camofs::instance_histogram(set);
    write_file((dir / "instance_histogram.json").string(), camofs::histogram_to_json(histogram));
    write_file((dir / "center_bias.csv").string(),
               camofs::center_bias_to_csv(camofs::center_bias(set)));
    write_file((dir / "resolution.csv").string(), camofs::resolution_csv(set));

    std::cout << "images=" << set.images.size() << " instances=" << set.annotations.size() << '\n';
    return 0;
}

int cmd_toy_train(const std::string& config_path, const std::string& out_path,
                  const std::string& trace_path) {
    camofs::SyntheticTask task;
    camofs::CompositeConfig cfg;
    int steps = 200;
    double lr = 0.1;

    if (!config_path.empty()) {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open config file: " + config_path);
        nlohmann::json j = nlohmann::json::parse(in);
        task.num_classes = j.value("num_classes", task.num_classes);
        task.dim = j.value("dim", task.dim);
        task.patches_per_class = j.value("patches_per_class", task.patches_per_class);
        task.patch_h = j.value("patch_h", task.patch_h);
        task.patch_w = j.value("patch_w", task.patch_w);
        task.separation = j.value("separation", task.separation);
        task.noise = j.value("noise", task.noise);
        task.seed = j.value("seed", task.seed);
        cfg.alpha = j.value("alpha", cfg.alpha);
        cfg.beta = j.value("beta", cfg.beta);
        cfg.triplet.margin = j.value("margin", cfg.triplet.margin);
        cfg.memory.tau = j.value("tau", cfg.memory.tau);
        cfg.memory.capacity = j.value("capacity", cfg.memory.capacity);
        steps = j.value("steps", steps);
        lr = j.value("lr", lr);
    }

    auto report = camofs::train(task, cfg, steps, lr);
    emit(out_path, camofs::report_to_json(report));
    if (!trace_path.empty()) write_file(trace_path, camofs::trace_to_csv(report));
    return 0;
}

int cmd_gradcheck(int trials, double tolerance, std::uint64_t seed) {
    auto report = camofs::ad::run_random_graph_check(trials, tolerance, seed);
    std::cout << "trials=" << report.trials << " failures=" << report.failures
              << " coords=" << report.coords_checked << " max_rel_err=" << report.max_rel_err
              << " seconds=" << report.seconds << '\n';
    return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"few-shot camouflaged-instance toolkit"};
    app.require_subcommand(1);

    std::string ann = default_annotation_path();
    std::string novel_list;
    std::string dets_path;
    std::string iou_type = "bbox";
    std::string out_path;
    std::string out_dir;
    std::string config_path;
    std::string trace_path;
    int shots = 5;
    std::uint64_t seed = 0;
    int trials = 100;
    double tolerance = 1e-4;
    std::uint64_t gc_seed = 42;

    auto* sample = app.add_subcommand("sample", "draw nested K-shot annotation subsets");
    sample->add_option("--ann", ann, "annotation JSON (default: $CAMOFS_ANN)");
    sample->add_option("--novel-classes", novel_list, "comma-separated novel class ids")->required();
    sample->add_option("--shots", shots, "shots per novel class (default 5)");
    sample->add_option("--seed", seed, "sampling seed (default 0)");
    sample->add_option("--out", out_path, "output annotation JSON path")->required();

    auto* eval = app.add_subcommand("eval", "COCO-style AP/AR evaluation");
    eval->add_option("--ann", ann, "ground-truth annotation JSON (default: $CAMOFS_ANN)");
    eval->add_option("--dets", dets_path, "detections JSON array")->required();
    eval->add_option("--iou-type", iou_type, "bbox or segm (default bbox)");
    eval->add_option("--out", out_path, "result JSON path (default: stdout)");

    auto* stats = app.add_subcommand("stats", "dataset statistics reports");
    stats->add_option("--ann", ann, "annotation JSON (default: $CAMOFS_ANN)");
    stats->add_option("--out-dir", out_dir, "directory for the report files")->required();

    auto* toy = app.add_subcommand("toy-train", "gradient-descent run on synthetic features");
    toy->add_option("--config", config_path, "JSON config (task, loss weights, steps, lr)");
    toy->add_option("--out", out_path, "training report JSON path (default: stdout)");
    toy->add_option("--trace-csv", trace_path, "per-step loss trace CSV path");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the tape");
    gradcheck->add_option("--trials", trials, "random graphs to test (default 100)");
    gradcheck->add_option("--tolerance", tolerance, "max relative error (default 1e-4)");
    gradcheck->add_option("--seed", gc_seed, "graph generator seed (default 42)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sample->parsed()) return cmd_sample(ann, novel_list, shots, seed, out_path);
        if (eval->parsed()) return cmd_eval(ann, dets_path, iou_type, out_path);
        if (stats->parsed()) return cmd_stats(ann, out_dir);
        if (toy->parsed()) return cmd_toy_train(config_path, out_path, trace_path);
        if (gradcheck->parsed()) return cmd_gradcheck(trials, tolerance, gc_seed);
    } catch (const std::exception& e) {
        std::cerr << "camofs: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
