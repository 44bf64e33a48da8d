#include "kernforge/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kernforge/bpe.hpp"
#include "kernforge/constraint.hpp"
#include "kernforge/error.hpp"
#include "kernforge/filter.hpp"
#include "kernforge/harness.hpp"
#include "kernforge/kern.hpp"
#include "kernforge/metrics.hpp"
#include "kernforge/normalizer.hpp"
#include "kernforge/parallel.hpp"

namespace kernforge::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct InputFile {
    fs::path path;
    fs::path relative;  // name under the input root, used for --out and pairing
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw KernError(ErrorCode::Io, "cannot read " + p.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& p, std::string_view bytes) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw KernError(ErrorCode::Io, "cannot write " + p.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Directories contribute their *.krn files recursively; results are in
// sorted path order.
std::vector<InputFile> collect(const std::vector<std::string>& paths) {
    std::vector<InputFile> files;
    for (const std::string& s : paths) {
        fs::path root(s);
        if (fs::is_directory(root)) {
            std::vector<InputFile> found;
            for (const auto& entry : fs::recursive_directory_iterator(root)) {
                if (entry.is_regular_file() && entry.path().extension() == ".krn") {
                    found.push_back({entry.path(), fs::relative(entry.path(), root)});
                }
            }
            std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
            files.insert(files.end(), found.begin(), found.end());
        } else if (fs::exists(root)) {
            files.push_back({root, root.filename()});
        } else {
            throw KernError(ErrorCode::Io, "no such file or directory: " + s);
        }
    }
    return files;
}

ordered_json reasons_json(const filter::FilterReport& report) {
    auto reasons = ordered_json::array();
    for (const auto& r : report.reasons) {
        reasons.push_back({{"rule", r.rule}, {"line", r.line}, {"message", r.message}});
    }
    return reasons;
}

void emit(std::ostream& out, const ordered_json& j) { out << j.dump() << '\n'; }

bpe::BpeVocab load_vocab(const std::string& path) { return bpe::BpeVocab::from_json(read_file(path)); }

std::vector<int> parse_ids(const std::string& s) {
    std::vector<int> ids;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        ids.push_back(std::stoi(item));
    }
    return ids;
}

double percent(double fraction) { return std::round(fraction * 10000.0) / 100.0; }

struct Options {
    std::vector<std::string> inputs;
    std::string out_dir;
    std::string vocab;
    std::size_t vocab_size = bpe::kDefaultVocabSize;
    std::string prefix;
    std::string prefix_file;
    std::string ids;
    bool raw = false;
    std::string mode = "uniform";
    std::uint64_t seed = 0;
    std::size_t seeds = 1;
    bool constrained = false;
    std::size_t max_length = harness::kDefaultMaxLength;
    std::string replay_file;
    bool emit_text = false;
    std::vector<std::string> ref;
    std::vector<std::string> pred;
    bool aggregate = false;
    bool summary = false;
};

int cmd_validate(const Options& o, bool copy, std::ostream& out, std::ostream& err) {
    auto files = collect(o.inputs);
    auto reports = parallel_map<filter::FilterReport>(files.size(), [&](std::size_t i) {
        return filter::filter_file(read_file(files[i].path));
    });
    std::size_t rejected = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const auto& rep = reports[i];
        if (!rep.accepted) ++rejected;
        emit(out, {{"path", files[i].path.string()},
                   {"verdict", rep.accepted ? "accept" : "reject"},
                   {"reasons", reasons_json(rep)}});
        if (copy && rep.accepted && !o.out_dir.empty()) {
            write_file(fs::path(o.out_dir) / files[i].relative, read_file(files[i].path));
        }
    }
    if (o.summary) err << files.size() << " files, " << files.size() - rejected << " accepted, " << rejected << " rejected\n";
    return rejected == 0 ? kExitOk : kExitFailed;
}

int cmd_normalize(const Options& o, std::ostream& out, std::ostream& err) {
    auto files = collect(o.inputs);
    auto lines = parallel_map<ordered_json>(files.size(), [&](std::size_t i) {
        ordered_json line = {{"path", files[i].path.string()}};
        std::string bytes = read_file(files[i].path);
        auto report = filter::filter_file(bytes);
        if (!report.accepted) {
            line["status"] = "rejected";
            line["reasons"] = reasons_json(report);
            return line;
        }
        try {
            auto [doc, trace] = normalize::normalize_document(parse_document(bytes, files[i].path.string()));
            write_file(fs::path(o.out_dir) / files[i].relative, serialize_document(doc));
            line["status"] = "ok";
            line["edits"] = trace.total();
            ordered_json passes = ordered_json::object();
            for (const auto& [name, n] : trace.passes) passes[name] = n;
            line["passes"] = std::move(passes);
        } catch (const KernError& e) {
            line["status"] = "error";
            line["error"] = std::string(to_string(e.code()));
            line["line"] = e.line();
            line["message"] = e.what();
        }
        return line;
    });
    std::size_t failed = 0;
    std::size_t edits = 0;
    for (const auto& line : lines) {
        if (line["status"] != "ok") {
            ++failed;
        } else {
            edits += line["edits"].get<std::size_t>();
        }
        emit(out, line);
    }
    if (o.summary) err << files.size() << " files, " << failed << " not normalized, " << edits << " edits\n";
    return failed == 0 ? kExitOk : kExitFailed;
}

int cmd_bpe_train(const Options& o, std::ostream& out, std::ostream& err) {
    auto files = collect(o.inputs);
    std::vector<std::string> corpus;
    corpus.reserve(files.size());
    for (const auto& f : files) corpus.push_back(read_file(f.path));
    auto vocab = bpe::train(corpus, o.vocab_size);
    write_file(o.out_dir, vocab.to_json());
    emit(out, {{"vocab", o.out_dir},
               {"files", files.size()},
               {"vocab_size", vocab.vocab_size()},
               {"tokens", vocab.size()},
               {"merges", vocab.merges().size()}});
    if (o.summary) err << "trained " << vocab.merges().size() << " merges on " << files.size() << " files\n";
    return kExitOk;
}

int cmd_bpe_encode(const Options& o, std::ostream& out, std::ostream&) {
    auto vocab = load_vocab(o.vocab);
    auto files = collect(o.inputs);
    std::vector<std::string> docs;
    for (const auto& f : files) docs.push_back(read_file(f.path));
    auto encoded = bpe::encode_batch(vocab, docs);
    for (std::size_t i = 0; i < files.size(); ++i) {
        emit(out, {{"path", files[i].path.string()}, {"ids", encoded[i]}});
    }
    return kExitOk;
}

int cmd_bpe_decode(const Options& o, std::ostream& out, std::ostream&) {
    auto vocab = load_vocab(o.vocab);
    std::string text = vocab.decode(parse_ids(o.ids));
    if (o.raw) {
        out << text;
    } else {
        emit(out, {{"text", text}});
    }
    return kExitOk;
}

int cmd_mask(const Options& o, std::ostream& out, std::ostream& err) {
    auto vocab = load_vocab(o.vocab);
    constraint::ConstraintEngine engine(vocab.token_table());
    constraint::DecodeState state = engine.init_state();
    try {
        if (!o.ids.empty()) {
            for (int id : parse_ids(o.ids)) state = engine.advance_token(state, id);
        } else {
            std::string prefix = o.prefix_file.empty() ? o.prefix : read_file(o.prefix_file);
            if (!prefix.empty()) state = engine.advance(state, prefix);
        }
    } catch (const KernError& e) {
        emit(out, {{"live", false}, {"error", std::string(to_string(e.code()))}, {"message", e.what()}});
        if (o.summary) err << "prefix is not admissible\n";
        return kExitFailed;
    }
    auto mask = engine.compute_mask(state);
    emit(out, {{"live", true},
               {"terminated", state.terminated()},
               {"active_spines", state.active_spines},
               {"fields_in_record", state.fields_in_record},
               {"count", mask.count()},
               {"allowed", mask.allowed_ids()}});
    if (o.summary) err << mask.count() << " of " << mask.size() << " tokens allowed\n";
    return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    auto vocab = load_vocab(o.vocab);
    constraint::ConstraintEngine engine(vocab.token_table());

    std::vector<int> replay_ids;
    if (o.mode == "replay") {
        if (o.replay_file.empty()) throw CLI::ValidationError("--replay", "replay mode needs --replay FILE");
        replay_ids = vocab.encode(read_file(o.replay_file));
    } else if (o.mode != "uniform" && !harness::parse_rule(o.mode)) {
        throw CLI::ValidationError("--mode", "unknown mode " + o.mode);
    }
    auto make_source = [&](std::uint64_t seed) {
        if (o.mode == "uniform") return harness::LogitSource::uniform(seed);
        if (o.mode == "replay") return harness::LogitSource::replay(replay_ids);
        return harness::LogitSource::adversarial(*harness::parse_rule(o.mode), seed);
    };

    auto runs = parallel_map<harness::DecodeRun>(o.seeds, [&](std::size_t i) {
        return harness::run_decode(make_source(o.seed + i), engine, o.constrained, o.max_length);
    });

    std::size_t unsound = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        if (o.constrained && r.terminated_by == harness::Termination::Eos && !r.valid) ++unsound;
        ordered_json line = {{"seed", o.seed + i},
                             {"mode", o.mode},
                             {"constrained", o.constrained},
                             {"length", r.length()},
                             {"terminated_by", std::string(harness::to_string(r.terminated_by))},
                             {"valid", r.valid},
                             {"window", harness::repeated_window(r.tokens)}};
        if (o.mode == "replay") line["blocked_steps"] = r.blocked_steps;
        if (o.emit_text) line["text"] = r.text;
        emit(out, line);
    }
    if (o.summary) {
        std::vector<std::size_t> targets(runs.size(), replay_ids.size());
        auto s = harness::loop_stats(runs, o.mode == "replay" ? std::span<const std::size_t>(targets)
                                                               : std::span<const std::size_t>());
        err << s.runs << " runs, " << s.eos_runs << " ended by eos, " << s.long_runs << " over 4x target, max window "
            << s.max_window << ", " << unsound << " invalid eos outputs\n";
    }
    return unsound == 0 ? kExitOk : kExitFailed;
}

int cmd_score(const Options& o, std::ostream& out, std::ostream& err) {
    auto refs = collect(o.ref);
    auto preds = collect(o.pred);
    std::map<fs::path, fs::path> pred_by_name;
    for (const auto& p : preds) pred_by_name.emplace(p.relative, p.path);
    const bool single = refs.size() == 1 && preds.size() == 1;

    auto lines = parallel_map<ordered_json>(refs.size(), [&](std::size_t i) {
        ordered_json line = {{"pair", refs[i].relative.string()}};
        fs::path pred_path;
        if (single) {
            pred_path = preds.front().path;
        } else if (auto it = pred_by_name.find(refs[i].relative); it != pred_by_name.end()) {
            pred_path = it->second;
        } else {
            line["error"] = "missing prediction";
            return line;
        }
        try {
            auto rep = metrics::score(read_file(refs[i].path), read_file(pred_path));
            line["cer"] = rep.cer;
            line["omr_ned"] = percent(rep.omr.value());
            line["omr_ned_exact"] = rep.omr.exact().str();
            line["matched"] = rep.omr.matched;
            line["inserted"] = rep.omr.inserted;
            line["deleted"] = rep.omr.deleted;
            if (!rep.prediction_parsed) line["prediction_parsed"] = false;
        } catch (const KernError& e) {
            line["error"] = std::string(to_string(e.code()));
            line["message"] = e.what();
        }
        return line;
    });

    std::size_t failed = 0;
    double cer_sum = 0.0;
    double ned_sum = 0.0;
    for (const auto& line : lines) {
        emit(out, line);
        if (line.contains("error")) {
            ++failed;
        } else {
            cer_sum += line["cer"].get<double>();
            ned_sum += line["omr_ned"].get<double>();
        }
    }
    const std::size_t scored = lines.size() - failed;
    if (o.aggregate) {
        emit(out, {{"aggregate", true},
                   {"pairs", scored},
                   {"cer", scored ? cer_sum / static_cast<double>(scored) : 0.0},
                   {"omr_ned", scored ? std::round(ned_sum / static_cast<double>(scored) * 100.0) / 100.0 : 0.0}});
    }
    if (o.summary) err << scored << " pairs scored, " << failed << " failed\n";
    return failed == 0 ? kExitOk : kExitFailed;
}

int default_workers() {
    if (const char* env = std::getenv("KERNFORGE_WORKERS")) {
        try {
            return std::stoi(env);
        } catch (const std::exception&) {
        }
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"kernforge: **kern corpus filtering, normalization, tokenization, masking and scoring"};
    app.require_subcommand(1);
    Options o;
    int workers = default_workers();
    app.add_option("--workers", workers, "Worker threads (default: KERNFORGE_WORKERS or runtime default)");
    app.add_flag("--summary", o.summary, "Print a human summary to stderr");

    auto* validate = app.add_subcommand("validate", "Run the filter rule chain and report verdicts");
    validate->add_option("inputs", o.inputs, "Files or directories")->required();

    auto* filt = app.add_subcommand("filter", "Filter files, copying accepted ones to --out");
    filt->add_option("inputs", o.inputs, "Files or directories")->required();
    filt->add_option("--out", o.out_dir, "Destination for accepted files");

    auto* norm = app.add_subcommand("normalize", "Rewrite accepted files into normal form");
    norm->add_option("--in", o.inputs, "Files or directories")->required();
    norm->add_option("--out", o.out_dir, "Output directory")->required();

    auto* train = app.add_subcommand("bpe-train", "Train a split-space BPE vocabulary");
    train->add_option("inputs", o.inputs, "Normalized files or directories")->required();
    train->add_option("--out", o.out_dir, "Vocabulary JSON path")->required();
    train->add_option("--vocab-size", o.vocab_size, "Vocabulary size")->capture_default_str();

    auto* encode = app.add_subcommand("bpe-encode", "Encode files to token ids");
    encode->add_option("--vocab", o.vocab, "Vocabulary JSON")->required();
    encode->add_option("inputs", o.inputs, "Files or directories")->required();

    auto* decode = app.add_subcommand("bpe-decode", "Decode comma-separated token ids");
    decode->add_option("--vocab", o.vocab, "Vocabulary JSON")->required();
    decode->add_option("--ids", o.ids, "Comma-separated ids")->required();
    decode->add_flag("--raw", o.raw, "Write the decoded bytes instead of JSON");

    auto* mask = app.add_subcommand("mask", "Allowed next-token ids after a prefix");
    mask->add_option("--vocab", o.vocab, "Vocabulary JSON")->required();
    auto* prefix = mask->add_option("--prefix", o.prefix, "Prefix text");
    auto* prefix_file = mask->add_option("--prefix-file", o.prefix_file, "File holding the prefix text");
    auto* ids = mask->add_option("--ids", o.ids, "Prefix as comma-separated token ids");
    prefix->excludes(prefix_file)->excludes(ids);
    prefix_file->excludes(ids);

    auto* sim = app.add_subcommand("simulate", "Greedy decoding against synthetic logit sources");
    sim->add_option("--vocab", o.vocab, "Vocabulary JSON")->required();
    sim->add_option("--mode", o.mode, "uniform | replay | always-tab | always-lf | always-split | longest-first")
        ->capture_default_str();
    sim->add_option("--seed", o.seed, "First seed")->capture_default_str();
    sim->add_option("--seeds", o.seeds, "Number of consecutive seeds")->capture_default_str();
    sim->add_flag("--constrained", o.constrained, "Apply the constraint engine mask");
    sim->add_option("--max-length", o.max_length, "Token budget per run")->capture_default_str();
    sim->add_option("--replay", o.replay_file, "Kern file replayed in replay mode");
    sim->add_flag("--emit-text", o.emit_text, "Include decoded text in each report");

    auto* score = app.add_subcommand("score", "CER and OMR-NED between reference and prediction");
    score->add_option("--ref", o.ref, "Reference file or directory")->required();
    score->add_option("--pred", o.pred, "Prediction file or directory")->required();
    score->add_flag("--aggregate", o.aggregate, "Append the corpus mean");

    std::vector<std::string> rest(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }
    if (workers > 0) set_worker_count(workers);

    try {
        if (*validate) return cmd_validate(o, false, out, err);
        if (*filt) return cmd_validate(o, true, out, err);
        if (*norm) return cmd_normalize(o, out, err);
        if (*train) return cmd_bpe_train(o, out, err);
        if (*encode) return cmd_bpe_encode(o, out, err);
        if (*decode) return cmd_bpe_decode(o, out, err);
        if (*mask) return cmd_mask(o, out, err);
        if (*sim) return cmd_simulate(o, out, err);
        if (*score) return cmd_score(o, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    } catch (const KernError& e) {
        err << "kernforge: " << to_string(e.code()) << ": " << e.what() << '\n';
        return kExitFailed;
    } catch (const std::exception& e) {
        err << "kernforge: " << e.what() << '\n';
        return kExitFailed;
    }
    return kExitUsage;
}

}  // namespace kernforge::cli
