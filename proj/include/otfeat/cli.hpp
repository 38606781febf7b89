#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "otfeat/error.hpp"
#include "otfeat/index.hpp"
#include "otfeat/io.hpp"
#include "otfeat/merge.hpp"
#include "otfeat/ot.hpp"
#include "otfeat/report.hpp"
#include "otfeat/retrieval.hpp"

namespace otfeat::cli {

namespace detail {

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// Flag values shared by the OT-running subcommands, resolved into OTParams
// after parsing. --beta and --beta-rel are mutually exclusive.
struct SolverFlags {
    double beta = 0.0;
    double beta_rel = 0.05;
    int max_iters = 1000;
    double tol = 1e-6;
    SolveMode mode = SolveMode::Sinkhorn;
    CLI::Option* beta_opt = nullptr;
    CLI::Option* beta_rel_opt = nullptr;

    void attach(CLI::App* sub, bool with_mode = true) {
        beta_opt = sub->add_option("--beta", beta, "Entropy weight (absolute)")
                       ->check(CLI::PositiveNumber);
        beta_rel_opt = sub->add_option("--beta-rel", beta_rel,
                                       "Entropy weight as a fraction of the mean cost")
                           ->check(CLI::PositiveNumber)
                           ->default_val(0.05);
        beta_opt->excludes(beta_rel_opt);
        sub->add_option("--max-iters", max_iters, "Sinkhorn iteration budget")
            ->check(CLI::PositiveNumber)
            ->default_val(1000);
        sub->add_option("--tol", tol, "Max L-inf marginal violation")
            ->check(CLI::PositiveNumber)
            ->default_val(1e-6);
        if (with_mode) {
            sub->add_option("--mode", mode, "Solver: sinkhorn or exact")
                ->transform(CLI::CheckedTransformer(
                    std::map<std::string, SolveMode>{{"sinkhorn", SolveMode::Sinkhorn},
                                                     {"exact", SolveMode::Exact}},
                    CLI::ignore_case));
        }
    }

    OTParams params() const {
        OTParams p;
        if (beta_opt != nullptr && beta_opt->count() > 0) {
            p.beta = beta;
        } else if (beta_rel_opt != nullptr && beta_rel_opt->count() > 0) {
            p.beta_rel = beta_rel;
        }
        p.max_iters = max_iters;
        p.tol = tol;
        p.mode = mode;
        return p;
    }
};

inline void print_result_human(const RetrievalResult& result, std::ostream& out) {
    out << "rank\tcandidate_id\ttransport_cost\tconverged\n";
    for (std::size_t i = 0; i < result.ranked.size(); ++i) {
        const RankedCandidate& rc = result.ranked[i];
        out << i + 1 << '\t' << rc.candidate_id << '\t' << fmt(rc.transport_cost) << '\t'
            << (rc.converged ? "true" : "false") << '\n';
    }
    out << "evaluated_full " << result.evaluated_full << "  pruned " << result.pruned << '\n';
}

} // namespace detail

// Parses argv (without the program name) and runs one subcommand.
// Exit codes: 0 success, 1 usage or domain error, 2 I/O error.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"Pixel-level optimal-transport distances, cross-domain retrieval, "
                 "and convex feature merging over RFM1 feature maps"};
    app.require_subcommand(1);

    // index build
    auto* index_cmd = app.add_subcommand("index", "Feature-index operations");
    index_cmd->require_subcommand(1);
    auto* build = index_cmd->add_subcommand("build", "Build a retrieval index from a manifest");
    std::string build_manifest, build_out;
    std::uint32_t build_pool = 1;
    std::size_t build_cap = kDefaultSizeCap;
    build->add_option("--manifest", build_manifest, "Candidate manifest JSON")->required();
    build->add_option("--out", build_out, "Output index JSON")->required();
    build->add_option("--pool", build_pool, "Average-pool factor")->check(CLI::PositiveNumber)
        ->default_val(1);
    build->add_option("--size-cap", build_cap, "Max pixels per pooled map")
        ->check(CLI::PositiveNumber)
        ->default_val(kDefaultSizeCap);
    build->callback([&] {
        const Manifest manifest = read_manifest(build_manifest);
        const FeatureIndex index = build_index(manifest, build_pool, build_cap);
        save_index(index, build_out);
        out << "index: " << index.entries.size() << " entries, dim " << index.dim << ", pool "
            << index.pool_factor << " -> " << build_out << '\n';
    });

    // query
    auto* query_cmd = app.add_subcommand("query", "Nearest candidates for one feature map");
    std::string query_index, query_path;
    std::size_t query_k = 1;
    bool query_no_prune = false, query_json = false;
    detail::SolverFlags query_solver;
    query_cmd->add_option("--index", query_index, "Index JSON")->required();
    query_cmd->add_option("--query", query_path, "Query feature map (RFM1)")->required();
    query_cmd->add_option("--top-k", query_k, "Candidates to return")
        ->check(CLI::PositiveNumber)
        ->default_val(1);
    query_solver.attach(query_cmd);
    query_cmd->add_flag("--no-prune", query_no_prune, "Disable lower-bound pruning");
    query_cmd->add_flag("--json", query_json, "Print the result as JSON");
    query_cmd->callback([&] {
        const FeatureIndex index = load_index(query_index);
        const FeatureMap q = read_feature_map(query_path);
        if (query_k > index.entries.size()) {
            err << "note: top-k clipped to index size " << index.entries.size() << '\n';
        }
        const OTParams params = query_solver.params();
        const RetrievalResult result = query_no_prune
                                           ? query_exhaustive(q, index, params, query_k)
                                           : query_pruned(q, index, params, query_k);
        if (query_json) {
            out << result_to_json(result).dump(2) << '\n';
        } else {
            detail::print_result_human(result, out);
        }
    });

    // dist
    auto* dist_cmd = app.add_subcommand("dist", "OT distance between two feature maps");
    std::string dist_a, dist_b;
    std::uint32_t dist_pool = 1;
    detail::SolverFlags dist_solver;
    dist_cmd->add_option("--a", dist_a, "First feature map (RFM1)")->required();
    dist_cmd->add_option("--b", dist_b, "Second feature map (RFM1)")->required();
    dist_solver.attach(dist_cmd);
    dist_cmd->add_option("--pool", dist_pool, "Average-pool factor applied to both maps")
        ->check(CLI::PositiveNumber)
        ->default_val(1);
    dist_cmd->callback([&] {
        const FeatureMap a = avg_pool(read_feature_map(dist_a), dist_pool);
        const FeatureMap b = avg_pool(read_feature_map(dist_b), dist_pool);
        const OTResult r = ot_distance(a, b, dist_solver.params(), dist_solver.mode);
        out << "transport_cost " << detail::fmt(r.transport_cost) << '\n'
            << "regularized_objective " << detail::fmt(r.regularized_objective) << '\n'
            << "iterations " << r.iterations << '\n'
            << "converged " << (r.converged ? "true" : "false") << '\n'
            << "marginal_violation " << detail::fmt(r.marginal_violation) << '\n';
    });

    // merge
    auto* merge_cmd = app.add_subcommand("merge", "Convex-merge two feature maps");
    std::string merge_real, merge_sim, merge_out;
    double merge_alpha = 0.6;
    merge_cmd->add_option("--real", merge_real, "Real feature map (RFM1)")->required();
    merge_cmd->add_option("--sim", merge_sim, "Sim feature map (RFM1)")->required();
    merge_cmd->add_option("--alpha", merge_alpha, "Weight on the real feature")
        ->check(CLI::Range(0.0, 1.0))
        ->default_val(0.6);
    merge_cmd->add_option("--out", merge_out, "Output feature map (RFM1)")->required();
    merge_cmd->callback([&] {
        const FeatureMap real = read_feature_map(merge_real);
        const FeatureMap sim = read_feature_map(merge_sim);
        const FeatureMap merged = convex_merge(real, sim, MergeConfig{merge_alpha});
        write_feature_map(merged, merge_out);
        out << "merged " << merged.id << " -> " << merge_out << '\n';
    });

    // batch-merge
    auto* batch_cmd = app.add_subcommand(
        "batch-merge", "Retrieve the nearest sim feature for every real map and merge");
    std::string batch_manifest, batch_index, batch_out_dir;
    double batch_alpha = 0.6;
    unsigned batch_threads = 0;
    detail::SolverFlags batch_solver;
    batch_cmd->add_option("--real-manifest", batch_manifest, "Real-side manifest JSON")
        ->required();
    batch_cmd->add_option("--index", batch_index, "Sim-side index JSON")->required();
    batch_cmd->add_option("--alpha", batch_alpha, "Weight on the real feature")
        ->check(CLI::Range(0.0, 1.0))
        ->default_val(0.6);
    batch_cmd->add_option("--out-dir", batch_out_dir, "Output directory")->required();
    batch_solver.attach(batch_cmd);
    batch_cmd->add_option("--threads", batch_threads, "Worker threads (0 = all cores)")
        ->default_val(0);
    batch_cmd->callback([&] {
        const Manifest manifest = read_manifest(batch_manifest);
        const FeatureIndex index = load_index(batch_index);
        const MergedSet ms =
            batch_merge(manifest, index, MergeConfig{batch_alpha}, batch_solver.params(),
                        batch_threads);
        const std::filesystem::path manifest_path = write_merged_set(ms, batch_out_dir);
        out << "merged " << ms.items.size() << " items, " << ms.failures.size()
            << " failures -> " << manifest_path.string() << '\n';
    });

    // split
    auto* split_cmd = app.add_subcommand("split", "Assign train/val splits in a merged manifest");
    std::string split_manifest;
    std::size_t split_train = 0;
    std::uint64_t split_seed = 0;
    split_cmd->add_option("--merged-manifest", split_manifest, "Merged manifest JSON")
        ->required();
    split_cmd->add_option("--train", split_train, "Number of training items")->required();
    split_cmd->add_option("--seed", split_seed, "Shuffle seed")->required();
    split_cmd->callback([&] {
        const auto [n_train, n_val] = split_merged_manifest(split_manifest, split_train, split_seed);
        out << "split: " << n_train << " train / " << n_val << " val\n";
    });

    // report
    auto* report_cmd = app.add_subcommand("report", "Transport-cost CSV from query results");
    std::string report_results, report_out;
    report_cmd->add_option("--results", report_results, "Query results JSON")->required();
    report_cmd->add_option("--out", report_out, "Output CSV")->required();
    report_cmd->callback([&] {
        const std::vector<RetrievalResult> results = read_results(report_results);
        cost_report(results, report_out);
        std::size_t rows = 0;
        for (const RetrievalResult& r : results) {
            rows += r.ranked.size();
        }
        out << "report: " << rows << " rows -> " << report_out << '\n';
    });

    // convert
    auto* convert_cmd = app.add_subcommand("convert", "Import a 3-D float32 .npy array as RFM1");
    std::string convert_npy, convert_out;
    Domain convert_domain = Domain::Real;
    convert_cmd->add_option("--npy", convert_npy, "Input .npy file")->required();
    convert_cmd->add_option("--domain", convert_domain, "Domain tag: real or sim")
        ->required()
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Domain>{{"real", Domain::Real}, {"sim", Domain::Sim}},
            CLI::ignore_case));
    convert_cmd->add_option("--out", convert_out, "Output feature map (RFM1)")->required();
    convert_cmd->callback([&] {
        FeatureMap fm = read_npy_feature_map(convert_npy, convert_domain);
        fm.id = std::filesystem::path(convert_out).stem().string();
        write_feature_map(fm, convert_out);
        out << "converted " << fm.height << "x" << fm.width << "x" << fm.dim << " ("
            << domain_name(fm.domain) << ") -> " << convert_out << '\n';
    });

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.push_back("otfeat");
    for (const std::string& a : args) {
        argv_storage.push_back(a);
    }
    std::vector<const char*> argv;
    argv.reserve(argv_storage.size());
    for (const std::string& a : argv_storage) {
        argv.push_back(a.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace otfeat::cli
