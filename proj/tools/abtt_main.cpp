// abtt: apply the all-but-the-top postprocessing to word-embedding files and
// measure its effect.
//
// Subcommands: inspect, postprocess, eval, diagnose, synth, sweep.
// Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 numerical error.
// Every run logs its version, resolved configuration, and seed to stderr so
// any report can be reproduced byte for byte.

#include "abtt/diagnostics.hpp"
#include "abtt/evals.hpp"
#include "abtt/postprocess.hpp"
#include "abtt/serialize.hpp"
#include "abtt/synth.hpp"

#include "CLI11.hpp"

#include <unistd.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr const char* kVersion = "0.1.0";

using namespace abtt;

void log_run(const std::string& command, const Json& config, std::uint64_t seed) {
    Json entry{{"version", kVersion}, {"command", command}, {"seed", seed}, {"config", config}};
    std::fprintf(stderr, "%s\n", entry.dump().c_str());
}

void emit(const Json& report, const std::string& out_path) {
    if (!out_path.empty()) {
        write_json_file(report, out_path);
    } else {
        std::cout << report.dump(2) << '\n';
    }
}

Format format_flag(const std::string& name) { return parse_format(name); }

// --- postprocess model plumbing shared by eval/diagnose/sweep ---

struct ModelFlags {
    std::string model_path;
    std::optional<Index> null_dim;
    std::string mode = "literal";
};

void add_model_flags(CLI::App* cmd, ModelFlags& flags, bool with_model_file = true) {
    if (with_model_file)
        cmd->add_option("--post-model", flags.model_path,
                        "Load a fitted postprocess model (JSON) instead of fitting one");
    cmd->add_option("--d-null", flags.null_dim,
                    "Number of leading components to null (default: d/100 rule)");
    cmd->add_option("--mode", flags.mode, "Projection variant: literal|strict")
        ->check(CLI::IsMember({"literal", "strict"}));
}

PostprocessModel resolve_model(const ModelFlags& flags, const EmbeddingSet& set,
                               std::uint64_t seed) {
    if (!flags.model_path.empty()) {
        PostprocessModel model = model_from_json(read_json_file(flags.model_path));
        if (model.dim() != set.dim())
            throw ParseError("model dimension " + std::to_string(model.dim()) +
                             " does not match embeddings dimension " + std::to_string(set.dim()));
        return model;
    }
    return fit(set, flags.null_dim, parse_mode(flags.mode), seed);
}

// --- subcommand implementations ---

int run_inspect(const std::string& embeddings_path, const std::string& format,
                const std::string& out_path) {
    EmbeddingSet set = load_embeddings(embeddings_path, format_flag(format));
    GeometryReport report = geometry_report(set);
    Json j = to_json(report);
    j["embeddings"] = embeddings_path;
    j["vocab"] = set.size();
    j["dim"] = set.dim();
    emit(j, out_path);
    return 0;
}

int run_postprocess(const std::string& input, const std::string& output,
                    const std::string& format, const ModelFlags& flags, std::uint64_t seed,
                    const std::string& model_out) {
    if (input == output) throw Error("refusing to overwrite the input file");
    EmbeddingSet set = load_embeddings(input, format_flag(format));
    PostprocessModel model = fit(set, flags.null_dim, parse_mode(flags.mode), seed);
    EmbeddingSet processed = transform(model, set);
    Format out_format = format_flag(format);
    if (out_format == Format::auto_detect) out_format = Format::word2vec_text;
    save_embeddings(processed, output, out_format);
    if (!model_out.empty()) write_json_file(to_json(model), model_out);
    std::fprintf(stderr, "postprocessed %lld x %lld embeddings (D=%lld, %s) -> %s\n",
                 static_cast<long long>(set.size()), static_cast<long long>(set.dim()),
                 static_cast<long long>(model.null_dim()), mode_name(model.mode).c_str(),
                 output.c_str());
    return 0;
}

EvalDataset load_dataset(const std::string& task, const std::string& path) {
    if (task == "sim") return load_similarity(path);
    if (task == "cat") return load_categorization(path);
    if (task == "analogy") return load_analogy(path);
    if (task == "sts") return load_sts(path);
    throw Error("unknown task: " + task);
}

void print_paired_table(const std::vector<PairedReport>& reports) {
    std::printf("%-8s %-20s %10s %10s %9s %8s %7s %4s\n", "task", "dataset", "orig", "proc",
                "evaluated", "skipped", "mode", "D");
    for (const auto& r : reports) {
        std::printf("%-8s %-20s %10.2f %10.2f %9zu %8zu %7s %4lld\n", r.task.c_str(),
                    r.dataset.c_str(), r.orig.score_x100, r.proc.score_x100, r.orig.evaluated,
                    r.orig.skipped, r.mode.c_str(), static_cast<long long>(r.null_dim));
    }
}

int run_eval_command(const std::string& task, const std::string& embeddings_path,
                     const std::string& data_path, const std::string& format,
                     const ModelFlags& flags, std::uint64_t seed, const std::string& report_path,
                     bool normalize_analogy, bool normalize_vectors) {
    EmbeddingSet set = load_embeddings(embeddings_path, format_flag(format));
    PostprocessModel model = resolve_model(flags, set, seed);
    EvalDataset dataset = load_dataset(task, data_path);

    EvalOptions options;
    options.seed = seed;
    options.normalize_analogy = normalize_analogy;
    options.normalize_vectors = normalize_vectors;
    auto reports = before_after(set, model, {dataset}, options);

    Json j = to_json(reports.front());
    if (!report_path.empty()) write_json_file(j, report_path);
    if (isatty(fileno(stdout))) {
        print_paired_table(reports);
    } else if (report_path.empty()) {
        std::cout << j.dump(2) << '\n';
    }
    return 0;
}

void write_tsv_tables(const std::string& base, const GeometryReport& geometry,
                      const PartitionReport& partition, const FrequencyReport* frequency) {
    {
        std::ofstream out(base + ".spectrum.tsv");
        if (!out) throw ParseError("cannot write " + base + ".spectrum.tsv");
        out << "index\tvariance_ratio\tmax_normalized_singular_value\n";
        for (std::size_t i = 0; i < geometry.variance_ratios.size(); ++i)
            out << i + 1 << '\t' << geometry.variance_ratios[i] << '\t'
                << geometry.max_normalized_singular_values[i] << '\n';
    }
    {
        std::ofstream out(base + ".partition.tsv");
        if (!out) throw ParseError("cannot write " + base + ".partition.tsv");
        out << "sample\tz_over_mean\n";
        for (std::size_t i = 0; i < partition.values.size(); ++i)
            out << i << '\t' << partition.values[i] << '\n';
    }
    if (frequency) {
        std::ofstream out(base + ".frequency.tsv");
        if (!out) throw ParseError("cannot write " + base + ".frequency.tsv");
        out << "token\talpha1\talpha2\tlog_p\n";
        for (const auto& p : frequency->scatter)
            out << p.token << '\t' << p.alpha1 << '\t' << p.alpha2 << '\t' << p.log_p << '\n';
    }
}

int run_diagnose(const std::string& embeddings_path, const std::string& format,
                 const std::string& freqs_path, const ModelFlags& flags,
                 const std::string& out_path, std::size_t partition_samples, std::uint64_t seed,
                 bool tsv) {
    EmbeddingSet set = load_embeddings(embeddings_path, format_flag(format));
    GeometryReport geometry = geometry_report(set);
    PartitionReport partition = partition_report(set, partition_samples, seed);
    bool degenerate_mean = false;
    double mean_pc1 = mean_vs_pc1(set, seed, &degenerate_mean);

    Json j{{"embeddings", embeddings_path},
           {"vocab", set.size()},
           {"dim", set.dim()},
           {"geometry", to_json(geometry)},
           {"partition", to_json(partition)},
           {"mean_vs_pc1", mean_pc1},
           {"mean_vs_pc1_degenerate", degenerate_mean}};

    std::optional<FrequencyReport> frequency;
    // Postprocess-dependent diagnostics run only when a model or an explicit
    // --d-null is given; the evaluation default is never inherited silently.
    if (!flags.model_path.empty() || flags.null_dim.has_value()) {
        PostprocessModel model = resolve_model(flags, set, seed);
        j["model"] = {{"D", model.null_dim()}, {"mode", mode_name(model.mode)}};
        if (!freqs_path.empty() && model.null_dim() > 0) {
            FrequencyTable freqs = load_frequencies(freqs_path);
            frequency = frequency_report(set, model, freqs);
            j["frequency"] = to_json(*frequency);
        }
        EmbeddingSet processed = transform(model, set);
        GeometryReport geometry_after = geometry_report(processed);
        PartitionReport partition_after = partition_report(processed, partition_samples, seed);
        j["processed"] = {{"geometry", to_json(geometry_after)},
                          {"partition", to_json(partition_after)}};
    } else if (!freqs_path.empty()) {
        throw Error("--freqs requires --post-model or --d-null to define the components");
    }

    emit(j, out_path);
    if (tsv) {
        std::string base = out_path.empty() ? "abtt-diagnose" : out_path;
        write_tsv_tables(base, geometry, partition, frequency ? &*frequency : nullptr);
    }
    return 0;
}

int run_synth(Index vocab, Index dim, Index d_star, double mu_scale, double alpha_bound,
              bool freq_link, const std::vector<double>& clusters,
              const std::vector<double>& analogies, Index sim_pairs, std::uint64_t seed,
              const std::string& out_prefix) {
    SynthSpec spec;
    spec.vocab = vocab;
    spec.dim = dim;
    spec.d_star = d_star;
    spec.mu_scale = mu_scale;
    spec.alpha_bound = alpha_bound;
    spec.freq_link = freq_link ? FreqLink::monotone : FreqLink::none;
    spec.seed = seed;
    if (!clusters.empty()) {
        if (clusters.size() < 3 || clusters.size() > 4)
            throw Error("--clusters expects k,within,between[,n_words]");
        ClusterPlant plant;
        plant.n_categories = static_cast<int>(clusters[0]);
        plant.within_scale = clusters[1];
        plant.between_scale = clusters[2];
        plant.n_words = clusters.size() > 3 ? static_cast<Index>(clusters[3]) : 400;
        spec.cluster_plant = plant;
    }
    if (!analogies.empty()) {
        if (analogies.size() > 2) throw Error("--analogies expects n[,alignment]");
        AnalogyPlant plant;
        plant.n_quadruples = static_cast<Index>(analogies[0]);
        if (analogies.size() > 1) plant.alignment = analogies[1];
        spec.analogy_plant = plant;
    }

    SynthResult synth = generate(spec);
    OracleOptions oracle_options;
    oracle_options.n_sim_pairs = sim_pairs;
    OracleDatasets oracle = oracle_eval(synth.truth, spec, oracle_options);

    const std::string embeddings_path = out_prefix + ".embeddings.txt";
    const std::string residuals_path = out_prefix + ".residuals.txt";
    save_embeddings(synth.embeddings, embeddings_path, Format::word2vec_text);
    save_embeddings(synth.truth.residuals, residuals_path, Format::word2vec_text);
    write_json_file(to_json(synth.truth, residuals_path), out_prefix + ".truth.json");
    save_similarity(oracle.sim, out_prefix + ".sim.tsv");

    Json summary{{"embeddings", embeddings_path},
                 {"residuals", residuals_path},
                 {"truth", out_prefix + ".truth.json"},
                 {"sim", out_prefix + ".sim.tsv"},
                 {"clean_sim_spearman_x100", oracle.clean_sim_spearman_x100}};
    if (oracle.categorization) {
        save_categorization(*oracle.categorization, out_prefix + ".cat.tsv");
        summary["cat"] = out_prefix + ".cat.tsv";
        summary["clean_cat_purity_x100"] = *oracle.clean_cat_purity_x100;
    }
    if (oracle.analogy) {
        save_analogy(*oracle.analogy, out_prefix + ".analogy.txt");
        summary["analogy"] = out_prefix + ".analogy.txt";
        summary["clean_analogy_accuracy_x100"] = *oracle.clean_analogy_accuracy_x100;
    }
    if (synth.truth.freqs) {
        save_frequencies(*synth.truth.freqs, out_prefix + ".freq.txt");
        summary["freq"] = out_prefix + ".freq.txt";
    }
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int run_sweep(const std::string& embeddings_path, const std::string& format,
              const std::vector<Index>& d_values, const std::string& task,
              const std::string& data_path, const std::string& objective,
              const std::string& mode, std::uint64_t seed, const std::string& report_path) {
    if (d_values.empty()) throw Error("--d-values must list at least one candidate");
    EmbeddingSet set = load_embeddings(embeddings_path, format_flag(format));

    std::function<double(const EmbeddingSet&)> evaluator;
    std::string score_name;
    if (objective == "flatness") {
        evaluator = [](const EmbeddingSet& processed) { return spectrum_flatness(processed); };
        score_name = "spectrum_flatness";
    } else {
        if (task.empty() || data_path.empty())
            throw Error("sweep needs --task and --data, or --objective flatness");
        EvalDataset dataset = load_dataset(task, data_path);
        EvalOptions options;
        options.seed = seed;
        evaluator = [dataset, options](const EmbeddingSet& processed) {
            return run_eval(processed, dataset, options).score_x100;
        };
        score_name = task + "_score_x100";
    }

    auto rows = sweep_null_dimensions(set, d_values, parse_mode(mode), seed, evaluator);
    Json table = Json::array();
    for (const auto& row : rows) table.push_back({{"D", row.null_d}, {"score", row.score}});
    Json j{{"embeddings", embeddings_path},
           {"mode", mode},
           {"score", score_name},
           {"rows", table}};
    if (!report_path.empty()) write_json_file(j, report_path);
    if (isatty(fileno(stdout))) {
        std::printf("%6s %16s\n", "D", score_name.c_str());
        for (const auto& row : rows)
            std::printf("%6lld %16.6f\n", static_cast<long long>(row.null_d), row.score);
    } else if (report_path.empty()) {
        std::cout << j.dump(2) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"all-but-the-top word-embedding postprocessing and evaluation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::uint64_t seed = 0;  // fixed default: reproducibility over novelty

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Geometry report for an embedding file");
    std::string inspect_path, inspect_format = "auto", inspect_out;
    inspect->add_option("embeddings", inspect_path, "Embedding file")->required();
    inspect->add_option("--format", inspect_format, "word2vec-text|glove-text|auto")
        ->check(CLI::IsMember({"word2vec-text", "glove-text", "auto"}));
    inspect->add_option("--out", inspect_out, "Write the JSON report here instead of stdout");

    // postprocess
    auto* post = app.add_subcommand("postprocess", "Remove the mean and null top components");
    std::string post_input, post_output, post_format = "auto", post_model_out;
    ModelFlags post_flags;
    post->add_option("--input", post_input, "Input embedding file")->required();
    post->add_option("--output", post_output, "Output embedding file")->required();
    post->add_option("--format", post_format, "word2vec-text|glove-text|auto")
        ->check(CLI::IsMember({"word2vec-text", "glove-text", "auto"}));
    add_model_flags(post, post_flags, /*with_model_file=*/false);
    post->add_option("--seed", seed, "RNG seed (default 0)");
    post->add_option("--model-out", post_model_out, "Write the fitted model JSON here");

    // eval
    auto* eval = app.add_subcommand("eval", "Before/after evaluation on a task dataset");
    std::string eval_task, eval_embeddings, eval_data, eval_format = "auto", eval_report;
    bool normalize_analogy = false, normalize_vectors = false;
    ModelFlags eval_flags;
    eval->add_option("--task", eval_task, "sim|cat|analogy|sts")
        ->required()
        ->check(CLI::IsMember({"sim", "cat", "analogy", "sts"}));
    eval->add_option("--embeddings", eval_embeddings, "Embedding file")->required();
    eval->add_option("--data", eval_data, "Task dataset file")->required();
    eval->add_option("--format", eval_format, "word2vec-text|glove-text|auto")
        ->check(CLI::IsMember({"word2vec-text", "glove-text", "auto"}));
    add_model_flags(eval, eval_flags);
    eval->add_option("--seed", seed, "RNG seed (default 0)");
    eval->add_option("--report", eval_report, "Write the paired report JSON here");
    eval->add_flag("--normalize-analogy", normalize_analogy,
                   "Unit-normalize query vectors before the analogy arithmetic");
    eval->add_flag("--normalize-vectors", normalize_vectors,
                   "Length-normalize vectors before k-means clustering");

    // diagnose
    auto* diagnose = app.add_subcommand("diagnose", "Isotropy and frequency diagnostics");
    std::string diag_embeddings, diag_format = "auto", diag_freqs, diag_out;
    std::size_t partition_samples = 1000;
    bool diag_tsv = false;
    ModelFlags diag_flags;
    diagnose->add_option("--embeddings", diag_embeddings, "Embedding file")->required();
    diagnose->add_option("--format", diag_format, "word2vec-text|glove-text|auto")
        ->check(CLI::IsMember({"word2vec-text", "glove-text", "auto"}));
    diagnose->add_option("--freqs", diag_freqs, "Frequency table (token count per line)");
    add_model_flags(diagnose, diag_flags);
    diagnose->add_option("--out", diag_out, "Write the JSON report here instead of stdout");
    diagnose->add_option("--partition-samples", partition_samples,
                         "Random unit directions for the partition function (default 1000)");
    diagnose->add_option("--seed", seed, "RNG seed (default 0)");
    diagnose->add_flag("--tsv", diag_tsv, "Also emit flat .tsv tables for plotting");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a planted-structure embedding set");
    Index synth_vocab = 20000, synth_dim = 50, synth_d_star = 3, synth_sim_pairs = 500;
    double synth_mu = 0.3, synth_alpha = 2.0;
    bool synth_freq_link = false;
    std::vector<double> synth_clusters, synth_analogies;
    std::string synth_out;
    synth->add_option("--vocab", synth_vocab, "Vocabulary size")->required();
    synth->add_option("--dim", synth_dim, "Embedding dimension")->required();
    synth->add_option("--d-star", synth_d_star, "Planted dominant directions (default 3)");
    synth->add_option("--mu-scale", synth_mu, "Mean norm as a fraction of E||residual||");
    synth->add_option("--alpha-bound", synth_alpha, "Coefficient bound A");
    synth->add_flag("--freq-link", synth_freq_link,
                    "Tie alpha_1 monotonically to a Zipfian frequency table");
    synth->add_option("--clusters", synth_clusters, "k,within,between[,n_words]")->delimiter(',');
    synth->add_option("--analogies", synth_analogies, "n_quadruples[,alignment]")->delimiter(',');
    synth->add_option("--sim-pairs", synth_sim_pairs, "Similarity gold pairs (default 500)");
    synth->add_option("--seed", seed, "RNG seed (default 0)");
    synth->add_option("--out", synth_out, "Output path prefix")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Score a list of candidate D values");
    std::string sweep_embeddings, sweep_format = "auto", sweep_task, sweep_data,
                sweep_objective, sweep_mode = "literal", sweep_report;
    std::vector<Index> sweep_values;
    sweep->add_option("--embeddings", sweep_embeddings, "Embedding file")->required();
    sweep->add_option("--format", sweep_format, "word2vec-text|glove-text|auto")
        ->check(CLI::IsMember({"word2vec-text", "glove-text", "auto"}));
    sweep->add_option("--d-values", sweep_values, "Candidate D values (comma separated)")
        ->required()
        ->delimiter(',');
    sweep->add_option("--task", sweep_task, "sim|cat|analogy|sts")
        ->check(CLI::IsMember({"sim", "cat", "analogy", "sts"}));
    sweep->add_option("--data", sweep_data, "Task dataset file");
    sweep->add_option("--objective", sweep_objective,
                      "flatness: residual-spectrum max/min instead of a task score")
        ->check(CLI::IsMember({"flatness"}));
    sweep->add_option("--mode", sweep_mode, "literal|strict")
        ->check(CLI::IsMember({"literal", "strict"}));
    sweep->add_option("--seed", seed, "RNG seed (default 0)");
    sweep->add_option("--report", sweep_report, "Write the sweep table JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*inspect) {
            log_run("inspect", Json{{"embeddings", inspect_path}, {"format", inspect_format}},
                    seed);
            return run_inspect(inspect_path, inspect_format, inspect_out);
        }
        if (*post) {
            Json config{{"input", post_input},
                        {"output", post_output},
                        {"format", post_format},
                        {"mode", post_flags.mode},
                        {"model_out", post_model_out}};
            if (post_flags.null_dim) config["d_null"] = *post_flags.null_dim;
            log_run("postprocess", config, seed);
            return run_postprocess(post_input, post_output, post_format, post_flags, seed,
                                   post_model_out);
        }
        if (*eval) {
            Json config{{"task", eval_task},
                        {"embeddings", eval_embeddings},
                        {"data", eval_data},
                        {"format", eval_format},
                        {"mode", eval_flags.mode},
                        {"post_model", eval_flags.model_path},
                        {"normalize_analogy", normalize_analogy},
                        {"normalize_vectors", normalize_vectors}};
            if (eval_flags.null_dim) config["d_null"] = *eval_flags.null_dim;
            log_run("eval", config, seed);
            return run_eval_command(eval_task, eval_embeddings, eval_data, eval_format,
                                    eval_flags, seed, eval_report, normalize_analogy,
                                    normalize_vectors);
        }
        if (*diagnose) {
            Json config{{"embeddings", diag_embeddings},
                        {"format", diag_format},
                        {"freqs", diag_freqs},
                        {"post_model", diag_flags.model_path},
                        {"mode", diag_flags.mode},
                        {"partition_samples", partition_samples},
                        {"tsv", diag_tsv}};
            if (diag_flags.null_dim) config["d_null"] = *diag_flags.null_dim;
            log_run("diagnose", config, seed);
            return run_diagnose(diag_embeddings, diag_format, diag_freqs, diag_flags, diag_out,
                                partition_samples, seed, diag_tsv);
        }
        if (*synth) {
            Json config{{"vocab", synth_vocab},       {"dim", synth_dim},
                        {"d_star", synth_d_star},     {"mu_scale", synth_mu},
                        {"alpha_bound", synth_alpha}, {"freq_link", synth_freq_link},
                        {"clusters", synth_clusters}, {"analogies", synth_analogies},
                        {"sim_pairs", synth_sim_pairs}, {"out", synth_out}};
            log_run("synth", config, seed);
            return run_synth(synth_vocab, synth_dim, synth_d_star, synth_mu, synth_alpha,
                             synth_freq_link, synth_clusters, synth_analogies, synth_sim_pairs,
                             seed, synth_out);
        }
        if (*sweep) {
            Json values = Json::array();
            for (Index v : sweep_values) values.push_back(v);
            Json config{{"embeddings", sweep_embeddings}, {"format", sweep_format},
                        {"d_values", values},            {"task", sweep_task},
                        {"data", sweep_data},            {"objective", sweep_objective},
                        {"mode", sweep_mode}};
            log_run("sweep", config, seed);
            return run_sweep(sweep_embeddings, sweep_format, sweep_values, sweep_task, sweep_data,
                             sweep_objective, sweep_mode, seed, sweep_report);
        }
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    }
    return 1;
}
