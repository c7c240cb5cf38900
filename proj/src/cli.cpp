#include "wordfuse/cli.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "wordfuse/checkpoint.hpp"
#include "wordfuse/heatmap.hpp"
#include "wordfuse/io.hpp"
#include "wordfuse/synth.hpp"
#include "wordfuse/wav.hpp"

namespace wordfuse {

int exit_code_for(ErrorKind kind) { return kind == ErrorKind::kNumeric ? 2 : 1; }

FrameMatrix record_frames(const Manifest& manifest, const UtteranceRecord& record, const MfscConfig& config) {
  const AudioBuffer audio = read_wav(manifest.audio_path(record));
  return extract_mfsc(audio, build_filterbank(audio.sample_rate, config), config);
}

AlignReport align_manifest(const Manifest& manifest, const Manifest& reference, const RunConfig& config,
                           std::size_t tolerance) {
  AlignReport report;
  const MfscConfig& mfsc = config.features.mfsc;
  PrototypeTable table;
  if (config.align.mode == "dtw") {
    for (const auto& r : reference.records) {
      if (!r.intervals) continue;
      const FrameMatrix frames = record_frames(reference, r, mfsc);
      for (std::size_t w = 0; w < r.tokens.size(); ++w) table.add(r.tokens[w], frames, (*r.intervals)[w]);
    }
    table.finalize();
    if (table.fallback.count == 0) {
      fail(ErrorKind::kAlignment, "the reference manifest has no records with word intervals to build prototypes from");
    }
  }
  for (const auto& r : manifest.records) {
    try {
      UtteranceRecord out = r;
      if (config.align.mode == "timestamps") {
        if (!r.timestamps) fail(ErrorKind::kManifest, "record has no timestamps");
        const AudioBuffer audio = read_wav(manifest.audio_path(r));
        const std::size_t n = frame_count(audio.samples.size(), ms_to_samples(mfsc.window_ms, audio.sample_rate),
                                          std::max<std::size_t>(1, ms_to_samples(mfsc.hop_ms, audio.sample_rate)));
        out.intervals = ingest_timestamps(*r.timestamps, mfsc.hop_ms, n, r.tokens.size());
      } else {
        const FrameMatrix frames = record_frames(manifest, r, mfsc);
        out.intervals = align_utterance(r.tokens, frames, table, config.align.radius, config.align.distance);
      }
      if (r.intervals && r.intervals->size() == out.intervals->size()) {
        for (std::size_t w = 0; w < r.intervals->size(); ++w) {
          const auto& a = (*r.intervals)[w];
          const auto& b = (*out.intervals)[w];
          const auto diff = [](std::size_t x, std::size_t y) { return x > y ? x - y : y - x; };
          ++report.words_compared;
          if (diff(a.start_frame, b.start_frame) <= tolerance && diff(a.end_frame, b.end_frame) <= tolerance) {
            ++report.words_within_tolerance;
          }
        }
      }
      report.records.push_back(std::move(out));
    } catch (const Error& e) {
      report.failures.push_back(r.id + ": " + e.what());
    }
  }
  return report;
}

namespace {

struct Options {
  RunConfig config;
  std::filesystem::path config_file;
  std::vector<std::string> overrides;
  std::optional<std::string> strategy, stage;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::string eval_split = "test";
  std::vector<std::string> ids;
  bool terminal = false;
  bool no_color = false;
  bool cross_validation = false;
  std::size_t n_per_class = 16;
  std::size_t classes = 2;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void write_config(const RunConfig& c, const std::filesystem::path& dir) {
  if (dir.empty()) return;
  write_file_atomic(dir / (c.command + ".config.json"), c.to_json().dump(2) + "\n");
}

std::filesystem::path cache_path(const RunConfig& c) {
  if (!c.cache.empty()) return c.cache;
  auto p = default_cache_path();
  if (p.empty()) fail(ErrorKind::kConfig, std::string("no --cache given and ") + kCacheDirEnv + " is not set");
  return p;
}

void require(const std::filesystem::path& p, const char* flag) {
  if (p.empty()) fail(ErrorKind::kConfig, std::string(flag) + " is required");
}

int cmd_synth(const Options& o, std::ostream& out) {
  const RunConfig& c = o.config;
  require(c.out_dir, "--out-dir");
  SynthConfig sc;
  sc.n_per_class = o.n_per_class;
  sc.classes = o.classes;
  sc.seed = c.seed;
  sc.hop_ms = c.features.mfsc.hop_ms;
  const SynthCorpus corpus = synth_toy_corpus(sc);
  write_synth_corpus(c.out_dir, corpus);
  write_config(c, c.out_dir);
  out << "wrote " << corpus.records.size() << " utterances to " << (c.out_dir / "manifest.jsonl").string() << "\n"
      << "linear probe train accuracy: text " << fmt(corpus.text_probe_accuracy, 3) << ", audio "
      << fmt(corpus.audio_probe_accuracy, 3) << "\n";
  return 0;
}

int cmd_align(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig& c = o.config;
  require(c.manifest, "--manifest");
  require(c.output, "--out");
  if (std::filesystem::weakly_canonical(c.output) == std::filesystem::weakly_canonical(c.manifest)) {
    fail(ErrorKind::kInput, "refusing to overwrite the input manifest; choose another --out");
  }
  const Manifest manifest = load_manifest(c.manifest);
  const Manifest reference = c.reference.empty() ? manifest : load_manifest(c.reference);
  const AlignReport report = align_manifest(manifest, reference, c);
  // Audio paths are resolved against the input manifest's directory.
  std::vector<UtteranceRecord> records = report.records;
  for (auto& r : records) r.audio = std::filesystem::absolute(manifest.audio_path(r)).lexically_normal().string();
  save_manifest(c.output, records);
  load_manifest(c.output);
  write_config(c, c.out_dir);
  out << "aligned " << records.size() << " of " << manifest.records.size() << " utterances (" << c.align.mode
      << ") -> " << c.output.string() << "\n";
  if (report.words_compared) {
    out << "boundary agreement with input intervals (±2 frames): " << report.words_within_tolerance << "/"
        << report.words_compared << " words ("
        << fmt(100.0 * static_cast<double>(report.words_within_tolerance) / static_cast<double>(report.words_compared), 1)
        << "%)\n";
  }
  for (const auto& f : report.failures) err << "align: " << f << "\n";
  return report.failures.empty() ? 0 : 1;
}

int cmd_extract(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig& c = o.config;
  require(c.manifest, "--manifest");
  const auto path = cache_path(c);
  const Manifest manifest = load_manifest(c.manifest);
  for (const auto& w : manifest.warnings) err << "warning: " << w << "\n";
  FeatureCache cache = FeatureCache::load(path);
  const ExtractReport report = extract_features(manifest, c.features, cache);
  if (report.computed) cache.save(path);
  write_config(c, c.out_dir);
  out << "extracted " << report.computed << " entries, " << report.reused << " up to date, " << report.failures.size()
      << " failed -> " << path.string() << " (" << cache.size() << " entries)\n";
  for (const auto& f : report.failures) err << "extract: " << f << "\n";
  return report.failures.empty() ? 0 : 1;
}

struct Dataset {
  Manifest manifest;
  FeatureCache cache;
  std::vector<std::string> ids;
  std::size_t padded_length = 0;
};

Dataset load_dataset(const RunConfig& c) {
  require(c.manifest, "--manifest");
  Dataset d;
  d.manifest = load_manifest(c.manifest);
  const auto path = cache_path(c);
  if (!std::filesystem::exists(path)) fail(ErrorKind::kInput, "feature cache " + path.string() + " not found; run extract");
  d.cache = FeatureCache::load(path);
  for (const auto& r : d.manifest.records) {
    const CacheEntry& e = d.cache.get(r.id);
    if (e.label != r.label || e.tokens != r.tokens) {
      fail(ErrorKind::kInput, "feature cache entry '" + r.id + "' is stale; re-run extract");
    }
    d.ids.push_back(r.id);
  }
  if (d.ids.empty()) fail(ErrorKind::kInput, "the manifest is empty");
  d.padded_length = dataset_padded_length(d.cache, d.ids);
  return d;
}

nlohmann::json split_json(const SplitConfig& s, std::size_t fold) {
  return {{"test_fraction", s.test_fraction}, {"folds", s.folds}, {"speaker_independent", s.speaker_independent},
          {"seed", s.seed}, {"fold", fold}};
}

std::string metrics_header() { return "name                     strategy  n     WA      UA      wF1\n"; }

std::string metrics_row(const std::string& name, const std::string& strategy, const Metrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %-8s  %-5zu %.4f  %.4f  %.4f\n", name.c_str(), strategy.c_str(), m.total, m.wa,
                m.ua, m.weighted_f1);
  return buf;
}

std::unique_ptr<Model> fresh_model(const RunConfig& c, const Dataset& d, const std::vector<std::string>& train_ids,
                                   std::uint64_t seed) {
  const EmbeddingTable table = table_from_cache(d.cache, train_ids, c.features.embedding_seed);
  ModelConfig mc = c.model;
  mc.seed = seed;
  mc.classes = std::max<std::size_t>(2, d.manifest.class_count());
  mc.embedding_dim = table.dimension;
  return std::make_unique<Model>(mc, table.vocabulary, embedding_matrix(table.vocabulary, table, c.features.embedding_seed));
}

int cmd_train(const Options& o, std::ostream& out) {
  const RunConfig& c = o.config;
  const Dataset d = load_dataset(c);
  const auto splits = make_splits(d.manifest.records, c.split);
  std::filesystem::path out_dir = c.out_dir;
  if (out_dir.empty() && !c.checkpoints.empty()) out_dir = c.checkpoints[0].parent_path();
  if (out_dir.empty()) out_dir = ".";
  std::filesystem::create_directories(out_dir);
  std::string history;
  auto log_epoch = [&](const EpochRecord& r) { history += r.to_json().dump() + "\n"; };

  if (o.cross_validation) {
    const auto inputs_for = [&](const Model& m) { return make_inputs(d.cache, d.ids, m.vocabulary(), d.padded_length); };
    std::vector<Metrics> folds;
    std::vector<double> wa, ua, f1;
    out << metrics_header();
    for (std::size_t k = 0; k < splits.size(); ++k) {
      PipelineConfig pc = c.training;
      pc.base.seed = c.seed + k;
      auto model = fresh_model(c, d, splits[k].train, pc.base.seed);
      const auto inputs = inputs_for(*model);
      train_pipeline(*model, select_inputs(inputs, splits[k].train), select_inputs(inputs, splits[k].validation), pc,
                     log_epoch);
      folds.push_back(evaluate(*model, select_inputs(inputs, splits[k].test)));
      wa.push_back(folds.back().wa);
      ua.push_back(folds.back().ua);
      f1.push_back(folds.back().weighted_f1);
      out << metrics_row("fold " + std::to_string(k), strategy_name(c.model.strategy), folds.back());
    }
    const auto swa = summarize(wa), sua = summarize(ua), sf1 = summarize(f1);
    out << "mean ± std               WA " << fmt(swa.mean) << " ± " << fmt(swa.stddev) << "  UA " << fmt(sua.mean)
        << " ± " << fmt(sua.stddev) << "  wF1 " << fmt(sf1.mean) << " ± " << fmt(sf1.stddev) << "\n";
    nlohmann::json report = {{"folds", nlohmann::json::array()},
                             {"wa", {{"mean", swa.mean}, {"std", swa.stddev}}},
                             {"ua", {{"mean", sua.mean}, {"std", sua.stddev}}},
                             {"weighted_f1", {{"mean", sf1.mean}, {"std", sf1.stddev}}}};
    for (const auto& m : folds) report["folds"].push_back(m.to_json());
    write_file_atomic(out_dir / "cv.json", report.dump(2) + "\n");
    write_file_atomic(out_dir / "history.jsonl", history);
    write_config(c, out_dir);
    return 0;
  }

  if (c.checkpoints.empty()) fail(ErrorKind::kConfig, "--checkpoint is required");
  if (c.fold >= splits.size()) fail(ErrorKind::kConfig, "fold " + std::to_string(c.fold) + " does not exist");
  const DatasetSplit& split = splits[c.fold];
  std::unique_ptr<Model> model;
  if (!c.init.empty()) {
    model = load_checkpoint(c.init);
    if (model->config().strategy != c.model.strategy) {
      out << "note: continuing from " << c.init.string() << " with its strategy '"
          << strategy_name(model->config().strategy) << "'\n";
    }
  } else {
    model = fresh_model(c, d, split.train, c.seed);
  }
  const auto inputs = make_inputs(d.cache, d.ids, model->vocabulary(), d.padded_length);
  const auto train = select_inputs(inputs, split.train);
  const auto validation = select_inputs(inputs, split.validation);
  const auto test = select_inputs(inputs, split.test);
  nlohmann::json stages = model->metadata.value("stages", nlohmann::json::array());
  if (!c.stage) {
    for (const auto& s : train_pipeline(*model, train, validation, c.training, log_epoch)) {
      stages.push_back({{"stage", stage_name(s.stage)}, {"best_epoch", s.best_epoch}, {"epochs_run", s.history.size()}});
    }
  } else {
    if (c.init.empty()) model->fit_audio_normalization(train);
    TrainConfig tc = c.training.base;
    tc.stage = *c.stage;
    tc.epochs = *c.stage == Stage::kText ? c.training.text_epochs
                : *c.stage == Stage::kAudio ? c.training.audio_epochs
                                            : c.training.fusion_epochs;
    const StageResult s = train_stage(*model, train, validation, tc, log_epoch);
    stages.push_back({{"stage", stage_name(s.stage)}, {"best_epoch", s.best_epoch}, {"epochs_run", s.history.size()}});
  }
  model->metadata["stages"] = stages;
  model->metadata["split"] = split_json(c.split, c.fold);
  model->metadata["features"] = c.features.to_json();
  model->metadata["padded_length"] = d.padded_length;
  model->metadata["training"] = c.training.to_json();
  save_checkpoint(c.checkpoints[0], *model);

  nlohmann::json metrics = {{"strategy", strategy_name(model->config().strategy)}};
  out << metrics_header();
  for (const auto& [name, set] : {std::pair<const char*, const std::vector<ModelInput>*>{"train", &train},
                                  {"validation", &validation}, {"test", &test}}) {
    if (set->empty()) continue;
    const Metrics m = evaluate(*model, *set);
    metrics[name] = m.to_json();
    out << metrics_row(name, strategy_name(model->config().strategy), m);
  }
  write_file_atomic(out_dir / "metrics.json", metrics.dump(2) + "\n");
  write_file_atomic(out_dir / "history.jsonl", history);
  write_config(c, out_dir);
  out << "checkpoint -> " << c.checkpoints[0].string() << "\n";
  return 0;
}

SplitConfig split_from_metadata(const Model& model, const RunConfig& c, std::size_t& fold) {
  SplitConfig s = c.split;
  fold = c.fold;
  if (!model.metadata.contains("split")) return s;
  const auto& j = model.metadata.at("split");
  s.test_fraction = j.at("test_fraction").get<double>();
  s.folds = j.at("folds").get<std::size_t>();
  s.speaker_independent = j.at("speaker_independent").get<bool>();
  s.seed = j.at("seed").get<std::uint64_t>();
  fold = j.at("fold").get<std::size_t>();
  return s;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const RunConfig& c = o.config;
  if (c.checkpoints.empty()) fail(ErrorKind::kConfig, "at least one --checkpoint is required");
  const Dataset d = load_dataset(c);
  nlohmann::json report = nlohmann::json::array();
  out << metrics_header();
  for (const auto& path : c.checkpoints) {
    auto model = load_checkpoint(path);
    std::size_t fold = 0;
    const SplitConfig sc = split_from_metadata(*model, c, fold);
    std::vector<std::string> ids;
    if (o.eval_split == "all") {
      ids = d.ids;
    } else {
      const auto splits = make_splits(d.manifest.records, sc);
      if (fold >= splits.size()) fail(ErrorKind::kConfig, "fold " + std::to_string(fold) + " does not exist");
      if (o.eval_split == "test") ids = splits[fold].test;
      else if (o.eval_split == "validation") ids = splits[fold].validation;
      else if (o.eval_split == "train") ids = splits[fold].train;
      else fail(ErrorKind::kConfig, "--split must be train, validation, test or all");
    }
    const auto inputs = make_inputs(d.cache, ids, model->vocabulary(), d.padded_length);
    const Metrics m = evaluate(*model, inputs);
    out << metrics_row(path.filename().string(), strategy_name(model->config().strategy), m);
    report.push_back({{"checkpoint", path.string()}, {"strategy", strategy_name(model->config().strategy)},
                      {"split", o.eval_split}, {"metrics", m.to_json()}});
  }
  if (!c.out_dir.empty()) {
    write_file_atomic(c.out_dir / "eval.json", report.dump(2) + "\n");
    write_config(c, c.out_dir);
  }
  return 0;
}

int cmd_visualize(const Options& o, std::ostream& out) {
  const RunConfig& c = o.config;
  if (c.checkpoints.empty()) fail(ErrorKind::kConfig, "--checkpoint is required");
  if (c.out_dir.empty() && !o.terminal) fail(ErrorKind::kConfig, "--out-dir is required unless --terminal is given");
  const Dataset d = load_dataset(c);
  auto model = load_checkpoint(c.checkpoints[0]);
  std::vector<std::string> ids;
  for (const auto& group : o.ids) {
    std::stringstream ss(group);
    std::string id;
    while (std::getline(ss, id, ','))
      if (!id.empty()) ids.push_back(id);
  }
  if (ids.empty()) fail(ErrorKind::kConfig, "--ids is required");
  for (const auto& id : ids) {
    const UtteranceRecord& r = d.manifest.find(id);
    const auto inputs = make_inputs(d.cache, {id}, model->vocabulary(), d.padded_length);
    const Prediction p = model->predict(inputs[0]);
    const HeatmapDocument doc = make_heatmap(id, r.tokens, p.attention);
    if (!c.out_dir.empty()) {
      write_file_atomic(c.out_dir / (id + ".svg"), render_svg(doc));
      out << "heatmap -> " << (c.out_dir / (id + ".svg")).string() << "\n";
    }
    if (o.terminal) out << render_terminal(doc, !o.no_color);
  }
  write_config(c, c.out_dir);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  o.config.model.strategy = Strategy::kFaf;
  CLI::App app{"Word-level multimodal fusion: features, alignment, training and attention heatmaps"};
  app.require_subcommand(1);
  std::string output_path;
  std::vector<std::string> checkpoint_paths;
  std::string manifest, cache, out_dir, reference, init, mode;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_file, "JSON configuration written by an earlier run");
    sub->add_option("--set", o.overrides, "Override a setting, key=value (repeatable)");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--out-dir", out_dir, "Output directory");
  };
  auto data = [&](CLI::App* sub) {
    sub->add_option("--manifest", manifest, "Utterance manifest (JSON lines)");
    sub->add_option("--cache", cache, std::string("Feature cache file (default $") + kCacheDirEnv + "/features.wfc)");
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic word × tone corpus");
  common(synth);
  synth->add_option("--n-per-class", o.n_per_class, "Utterances per class")->capture_default_str();
  synth->add_option("--classes", o.classes, "Number of classes")->capture_default_str();

  CLI::App* align = app.add_subcommand("align", "Attach word intervals (DTW or timestamps) to a copy of a manifest");
  common(align);
  data(align);
  align->add_option("--out", output_path, "Augmented manifest to write")->required();
  align->add_option("--mode", mode, "dtw or timestamps");
  align->add_option("--reference", reference, "Manifest with intervals used to build word prototypes (default: input)");

  CLI::App* extract = app.add_subcommand("extract", "Compute per-word MFSC maps and token embeddings into the cache");
  common(extract);
  data(extract);

  CLI::App* train = app.add_subcommand("train", "Train branches and fusion network");
  common(train);
  data(train);
  train->add_option("--checkpoint", checkpoint_paths, "Checkpoint to write");
  train->add_option("--init", init, "Checkpoint to continue from");
  train->add_option("--strategy", o.strategy, "hf, vf, faf, ul or dl");
  train->add_option("--stage", o.stage, "text, audio or fusion (default: all in order)");
  train->add_option("--epochs", o.epochs, "Epochs for every stage");
  train->add_flag("--cv", o.cross_validation, "Cross-validate over all folds instead of training one checkpoint");

  CLI::App* eval = app.add_subcommand("eval", "Score checkpoints; several checkpoints give a comparison table");
  common(eval);
  data(eval);
  eval->add_option("--checkpoint", checkpoint_paths, "Checkpoint(s) to evaluate")->required();
  eval->add_option("--split", o.eval_split, "train, validation, test or all")->capture_default_str();

  CLI::App* visualize = app.add_subcommand("visualize", "Write attention heatmaps for utterances");
  common(visualize);
  data(visualize);
  visualize->add_option("--checkpoint", checkpoint_paths, "Checkpoint")->required();
  visualize->add_option("--ids", o.ids, "Utterance ids (comma-separated or repeated)");
  visualize->add_flag("--terminal", o.terminal, "Also print a terminal rendering");
  visualize->add_flag("--no-color", o.no_color, "Terminal rendering without ANSI colours");

  std::vector<std::string> argv_storage{"wordfuse"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    for (const auto* sub : app.get_subcommands()) err << sub->help();
    return 1;
  }

  try {
    RunConfig& c = o.config;
    c.command = app.get_subcommands().front()->get_name();
    c.sync();
    if (!o.config_file.empty()) {
      try {
        c.merge_json(nlohmann::json::parse(read_file(o.config_file)));
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::kConfig, o.config_file.string() + ": " + e.what());
      }
      c.command = app.get_subcommands().front()->get_name();
    }
    for (const auto& kv : o.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail(ErrorKind::kConfig, "--set expects key=value, got '" + kv + "'");
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) c.set_seed(*o.seed);
    if (o.strategy) c.model.strategy = parse_strategy(*o.strategy);
    if (o.stage) c.stage = *o.stage == "all" ? std::nullopt : std::optional<Stage>(parse_stage(*o.stage));
    if (o.epochs) c.set_epochs(*o.epochs);
    if (!mode.empty()) c.set("align.mode", mode);
    if (!manifest.empty()) c.manifest = manifest;
    if (!cache.empty()) c.cache = cache;
    if (!out_dir.empty()) c.out_dir = out_dir;
    if (!reference.empty()) c.reference = reference;
    if (!init.empty()) c.init = init;
    if (!output_path.empty()) c.output = output_path;
    if (!checkpoint_paths.empty()) c.checkpoints.assign(checkpoint_paths.begin(), checkpoint_paths.end());
    c.sync();

    if (c.command == "synth") return cmd_synth(o, out);
    if (c.command == "align") return cmd_align(o, out, err);
    if (c.command == "extract") return cmd_extract(o, out, err);
    if (c.command == "train") return cmd_train(o, out);
    if (c.command == "eval") return cmd_eval(o, out);
    if (c.command == "visualize") return cmd_visualize(o, out);
    fail(ErrorKind::kConfig, "unknown command " + c.command);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace wordfuse
