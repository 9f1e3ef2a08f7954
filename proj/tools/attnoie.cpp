/*
 * Copyright 2026 The attnoie Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// attnoie command-line driver.
//
//   attnoie extract        --bundles B.jsonl --attn A.atn --out E.jsonl
//   attnoie score          --extractions E.jsonl --gold G --regime exact ...
//   attnoie build-mapping  --extractions E.jsonl --bundles B.jsonl --dict D.tsv --kg K.tsv ...
//   attnoie link           --bundles B.jsonl --dict D.tsv --out L.jsonl
//   attnoie align          --bundles B.jsonl --dict D.tsv --kg K.tsv --out G.jsonl
//
// Exit status: 0 ok, 1 usage, 2 input format, 3 internal invariant.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "attnoie/attnoie.hpp"

namespace fs = std::filesystem;
using namespace attnoie;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kInternal = 3 };

// Writes `contents` to `path` via a sibling temp file and rename.
void write_atomically(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + tmp.string() + "'");
    out << contents;
    out.close();
    if (out.fail()) throw Error(ErrorCode::kInvalidArgument, "failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Config snapshot, paths and timing; written next to each output as
/// `<output>.manifest.json`. The only file that varies between reruns.
struct RunManifest {
  std::string command;
  json config = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started_at = utc_now();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const fs::path& output) const {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json j{{"tool", "attnoie"},       {"version", kVersion},  {"command", command},
           {"config", config},        {"inputs", inputs},     {"outputs", outputs},
           {"started_at", started_at}, {"wall_seconds", seconds}};
    fs::path path = output;
    path += ".manifest.json";
    write_atomically(path, j.dump(2) + "\n");
  }
};

std::string to_jsonl(const std::vector<json>& lines) {
  std::string out;
  for (const auto& j : lines) out += j.dump() + "\n";
  return out;
}

StopLists load_stop_lists(const std::string& aux_path, const std::string& adverb_path) {
  StopLists stops = StopLists::defaults();
  if (!aux_path.empty()) stops.auxiliaries = load_token_list(aux_path);
  if (!adverb_path.empty()) stops.adverbs = load_token_list(adverb_path);
  return stops;
}

// ---------------------------------------------------------------------------
// extract

struct ExtractOptions {
  std::string bundles;
  std::string attn;
  std::string out;
  std::string head_reduction = "mean";
  std::string layer = "last";
  bool bidirectional = true;
  bool contiguous = true;
  std::size_t jobs = 1;
  std::string aux_list;
  std::string adverb_list;
  ExtractionConfig config;
};

int run_extract(const ExtractOptions& opt) {
  RunManifest manifest;
  manifest.command = "extract";
  ExtractionConfig config = opt.config;
  config.head_reduction = opt.head_reduction == "max" ? HeadReduction::kMax : HeadReduction::kMean;
  config.layer_selection =
      opt.layer == "mean_all" ? LayerSelection::kMeanAll : LayerSelection::kLast;
  config.bidirectional = opt.bidirectional;
  config.validate();
  const StopLists stops = load_stop_lists(opt.aux_list, opt.adverb_list);

  const std::vector<SentenceBundle> bundles = read_bundles(opt.bundles);
  for (const auto& b : bundles) {
    const auto violations = validate_bundle(b);
    if (!violations.empty())
      throw Error(ErrorCode::kFormat, "bundle '" + b.sentence_id + "': " + violations.front());
  }

  // Attention files: per-bundle reference (relative to the bundles file) or --attn.
  std::map<fs::path, std::unique_ptr<AttentionReader>> readers;
  std::vector<const AttentionReader*> reader_of(bundles.size(), nullptr);
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    fs::path p = bundles[i].attention_ref.file.empty()
                     ? fs::path(opt.attn)
                     : fs::path(opt.bundles).parent_path() / bundles[i].attention_ref.file;
    if (p.empty())
      throw Error(ErrorCode::kInvalidArgument,
                  "no attention file for '" + bundles[i].sentence_id + "' (use --attn)");
    auto& slot = readers[p];
    if (!slot) {
      slot = std::make_unique<AttentionReader>(p);
      manifest.inputs.push_back(p.string());
    }
    reader_of[i] = slot.get();
  }

  std::vector<std::vector<Extraction>> per_sentence(bundles.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_index = bundles.size();
  auto worker = [&] {
    for (std::size_t i = next++; i < bundles.size(); i = next++) {
      try {
        const SentenceBundle& b = bundles[i];
        const AttentionTensor tensor = reader_of[i]->read_record(b.attention_ref.record);
        const WordAttentionMatrix matrix = word_attention(tensor, b, config);
        per_sentence[i] = extract_sentence(b, matrix, config);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opt.jobs, bundles.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<Extraction> all;
  for (auto& list : per_sentence)
    for (auto& e : list) all.push_back(std::move(e));
  all = filter_by_frequency(all, config.min_predicate_frequency, stops, config.strict_frequency);
  if (opt.contiguous) {
    std::map<std::string, const SentenceBundle*> by_id;
    for (const auto& b : bundles) by_id.emplace(b.sentence_id, &b);
    std::erase_if(all, [&](const Extraction& e) {
      return !check_contiguity(e, *by_id.at(e.sentence_id));
    });
  }
  std::stable_sort(all.begin(), all.end(), [](const Extraction& a, const Extraction& b) {
    if (a.sentence_id != b.sentence_id) return a.sentence_id < b.sentence_id;
    return extraction_order(a, b);
  });

  std::vector<json> lines;
  lines.reserve(all.size());
  for (const auto& e : all) lines.push_back(extraction_to_json(e));
  write_atomically(opt.out, to_jsonl(lines));

  manifest.inputs.insert(manifest.inputs.begin(), opt.bundles);
  manifest.outputs = {opt.out};
  manifest.config = json{{"beam_size", config.beam_size},
                         {"score_threshold", config.score_threshold},
                         {"min_pred_freq", config.min_predicate_frequency},
                         {"strict_freq", config.strict_frequency},
                         {"head_reduction", opt.head_reduction},
                         {"layer", opt.layer},
                         {"bidirectional", config.bidirectional},
                         {"allow_empty_predicate", config.allow_empty_predicate},
                         {"max_gap", config.max_gap},
                         {"contiguous", opt.contiguous},
                         {"jobs", opt.jobs}};
  manifest.write(opt.out);
  return kOk;
}

// ---------------------------------------------------------------------------
// score

struct ScoreOptions {
  std::string extractions;
  std::string gold;
  std::string gold_format;  // tsv | jsonl; inferred from extension when empty
  std::string regime = "exact";
  std::string mapping;
  std::string out;
  bool auc = false;
  std::string aux_list;
  std::string adverb_list;
};

int run_score(const ScoreOptions& opt) {
  RunManifest manifest;
  manifest.command = "score";
  const StopLists stops = load_stop_lists(opt.aux_list, opt.adverb_list);
  const MatchRegime regime = opt.regime == "lexical" ? MatchRegime::kLexical
                             : opt.regime == "tuple" ? MatchRegime::kTuple
                                                     : MatchRegime::kExact;

  std::vector<Extraction> preds;
  for_each_jsonl(opt.extractions, [&](const json& j, std::size_t line) {
    if (opt.auc && !j.contains("norm_score"))
      throw Error(ErrorCode::kFormat, "--auc needs scored extractions (line " +
                                          std::to_string(line) + " has no norm_score)");
    preds.push_back(extraction_from_json(j));
  });

  std::string format = opt.gold_format;
  if (format.empty()) format = fs::path(opt.gold).extension() == ".tsv" ? "tsv" : "jsonl";
  std::vector<GoldTriple> golds;
  if (format == "tsv") {
    GoldTsvResult r = read_gold_tsv(opt.gold);
    if (r.truncated_rows > 0)
      std::cerr << opt.gold << ": truncated " << r.truncated_rows
                << " gold rows with more than two arguments\n";
    golds = std::move(r.triples);
  } else {
    golds = read_gold_jsonl(opt.gold);
  }

  std::optional<PredicateMapping> mapping;
  if (!opt.mapping.empty()) mapping = load_mapping(opt.mapping, stops);
  const PredicateMapping* mapping_ptr = mapping ? &*mapping : nullptr;

  const MatchReport report = score_corpus(preds, golds, regime, mapping_ptr, stops);
  std::optional<AucResult> auc;
  if (opt.auc) auc = auc_and_best_f1(preds, golds, regime, mapping_ptr, stops);
  const std::string body = report_to_json(report, auc ? &*auc : nullptr).dump(2) + "\n";

  if (opt.out.empty()) {
    std::cout << body;
  } else {
    write_atomically(opt.out, body);
    manifest.inputs = {opt.extractions, opt.gold};
    if (!opt.mapping.empty()) manifest.inputs.push_back(opt.mapping);
    manifest.outputs = {opt.out};
    manifest.config = json{{"regime", opt.regime}, {"gold_format", format}, {"auc", opt.auc}};
    manifest.write(opt.out);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// link / align / build-mapping

struct KgOptions {
  std::string bundles;
  std::string dict;
  std::string kg;
  std::string extractions;
  std::string seed;
  std::string reject;
  std::string out;
  double pmi_threshold = 0.0;
  std::size_t sample = 0;
  std::uint64_t sample_seed = 0;
  std::string sample_out;
  std::string aux_list;
  std::string adverb_list;
};

json mention_to_json(const LinkedMention& m) {
  return json{{"start", m.span.start},
              {"end", m.span.end},
              {"surface", m.span.surface},
              {"entity_id", m.entity_id},
              {"probability", m.probability}};
}

int run_link(const KgOptions& opt) {
  RunManifest manifest;
  manifest.command = "link";
  const auto bundles = read_bundles(opt.bundles);
  const MentionDictionary dict = load_dictionary(opt.dict);
  std::vector<json> lines;
  for (const auto& b : bundles) {
    json mentions = json::array();
    for (const auto& m : link_mentions(b, dict)) mentions.push_back(mention_to_json(m));
    lines.push_back(json{{"sentence_id", b.sentence_id}, {"mentions", std::move(mentions)}});
  }
  write_atomically(opt.out, to_jsonl(lines));
  manifest.inputs = {opt.bundles, opt.dict};
  manifest.outputs = {opt.out};
  manifest.write(opt.out);
  return kOk;
}

int run_align(const KgOptions& opt) {
  RunManifest manifest;
  manifest.command = "align";
  const auto bundles = read_bundles(opt.bundles);
  const MentionDictionary dict = load_dictionary(opt.dict);
  const KGStore kg = load_kg(opt.kg);
  std::vector<json> lines;
  std::vector<std::pair<std::size_t, GoldTriple>> aligned;  // (bundle index, gold)
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const auto linked = link_mentions(bundles[i], dict);
    for (auto& g : align_distant(bundles[i], linked, kg)) {
      lines.push_back(gold_to_json(g));
      aligned.emplace_back(i, std::move(g));
    }
  }
  write_atomically(opt.out, to_jsonl(lines));
  manifest.inputs = {opt.bundles, opt.dict, opt.kg};
  manifest.outputs = {opt.out};

  if (opt.sample > 0) {
    if (opt.sample_out.empty())
      throw Error(ErrorCode::kInvalidArgument, "--sample needs --sample-out");
    std::vector<std::size_t> picks(aligned.size());
    for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
    std::mt19937_64 rng(opt.sample_seed);
    std::shuffle(picks.begin(), picks.end(), rng);
    picks.resize(std::min(opt.sample, picks.size()));
    std::sort(picks.begin(), picks.end());
    std::vector<json> review;
    for (std::size_t p : picks) {
      const auto& [bi, gold] = aligned[p];
      review.push_back(json{{"sentence", text::join(bundles[bi].words)}, {"gold", gold_to_json(gold)}});
    }
    write_atomically(opt.sample_out, to_jsonl(review));
    manifest.outputs.push_back(opt.sample_out);
  }
  manifest.config = json{{"sample", opt.sample}, {"sample_seed", opt.sample_seed}};
  manifest.write(opt.out);
  return kOk;
}

int run_build_mapping(const KgOptions& opt) {
  RunManifest manifest;
  manifest.command = "build-mapping";
  const StopLists stops = load_stop_lists(opt.aux_list, opt.adverb_list);
  const auto bundles = read_bundles(opt.bundles);
  const auto extractions = read_extractions(opt.extractions);
  const MentionDictionary dict = load_dictionary(opt.dict);
  const KGStore kg = load_kg(opt.kg);
  PredicateMapping seed;
  if (!opt.seed.empty()) seed = load_mapping(opt.seed, stops);
  RejectList reject;
  if (!opt.reject.empty()) reject = load_reject_list(opt.reject, stops);

  std::map<std::string, std::vector<LinkedMention>> linked;
  for (const auto& b : bundles) linked[b.sentence_id] = link_mentions(b, dict);

  std::vector<PhraseObservation> observations;
  for (const Extraction& e : extractions) {
    auto it = linked.find(e.sentence_id);
    if (it == linked.end()) continue;
    const LinkedMention* subject = argument_entity(e.arg0, it->second);
    const LinkedMention* object = argument_entity(e.arg1, it->second);
    if (subject == nullptr || object == nullptr) continue;
    const std::string phrase = normalize_predicate(e, stops);
    if (phrase.empty()) continue;
    observations.push_back({{subject->entity_id, object->entity_id}, phrase});
  }
  const CooccurrenceTable table = accumulate_cooccurrence(observations, kg.by_pair());
  const PredicateMapping mapping = bootstrap_mapping(table, seed, opt.pmi_threshold, reject);
  write_atomically(opt.out, mapping_to_jsonl(mapping));

  manifest.inputs = {opt.extractions, opt.bundles, opt.dict, opt.kg};
  if (!opt.seed.empty()) manifest.inputs.push_back(opt.seed);
  if (!opt.reject.empty()) manifest.inputs.push_back(opt.reject);
  manifest.outputs = {opt.out};
  manifest.config = json{{"pmi_threshold", opt.pmi_threshold},
                         {"observations", observations.size()},
                         {"cooccurrence_cells", table.cells().size()}};
  manifest.write(opt.out);
  return kOk;
}

void add_stoplist_flags(CLI::App* cmd, std::string& aux, std::string& adverb) {
  cmd->add_option("--aux-list", aux, "Auxiliary-verb stop list (one token per line)")
      ->check(CLI::ExistingFile)
      ->envname("ATTNOIE_AUX_LIST");
  cmd->add_option("--adverb-list", adverb, "Adverb stop list (one token per line)")
      ->check(CLI::ExistingFile)
      ->envname("ATTNOIE_ADVERB_LIST");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-guided zero-shot open information extraction"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  ExtractOptions ex;
  auto* extract = app.add_subcommand("extract", "Extract triples from bundles + attention");
  extract->add_option("--bundles", ex.bundles, "SentenceBundle JSONL")->required()->check(CLI::ExistingFile);
  extract->add_option("--attn", ex.attn, "ATN1 attention file")->envname("ATTNOIE_ATTN");
  extract->add_option("--out", ex.out, "Output extractions JSONL")->required();
  extract->add_option("--beam-size", ex.config.beam_size, "Beam size k")
      ->capture_default_str()->check(CLI::PositiveNumber)->envname("ATTNOIE_BEAM_SIZE");
  extract->add_option("--score-threshold", ex.config.score_threshold, "Minimum normalized score")
      ->capture_default_str()->check(CLI::NonNegativeNumber)->envname("ATTNOIE_SCORE_THRESHOLD");
  extract->add_option("--min-pred-freq", ex.config.min_predicate_frequency, "Minimum predicate frequency")
      ->capture_default_str()->check(CLI::PositiveNumber)->envname("ATTNOIE_MIN_PRED_FREQ");
  extract->add_flag("--strict-freq", ex.config.strict_frequency,
                    "Require frequency strictly above --min-pred-freq")->envname("ATTNOIE_STRICT_FREQ");
  extract->add_option("--head-reduction", ex.head_reduction, "mean | max")
      ->capture_default_str()->check(CLI::IsMember({"mean", "max"}))->envname("ATTNOIE_HEAD_REDUCTION");
  extract->add_option("--layer", ex.layer, "last | mean_all")
      ->capture_default_str()->check(CLI::IsMember({"last", "mean_all"}))->envname("ATTNOIE_LAYER");
  extract->add_option("--bidirectional", ex.bidirectional, "Search both directions")
      ->capture_default_str()->envname("ATTNOIE_BIDIRECTIONAL");
  extract->add_flag("--allow-empty-predicate", ex.config.allow_empty_predicate,
                    "Keep triples with no predicate words")->envname("ATTNOIE_ALLOW_EMPTY_PREDICATE");
  extract->add_option("--max-gap", ex.config.max_gap, "Skip pairs further apart than this many words")
      ->capture_default_str()->envname("ATTNOIE_MAX_GAP");
  extract->add_option("--contiguous", ex.contiguous, "Drop predicates that are not contiguous")
      ->capture_default_str()->envname("ATTNOIE_CONTIGUOUS");
  extract->add_option("--jobs", ex.jobs, "Worker threads")
      ->capture_default_str()->check(CLI::PositiveNumber)->envname("ATTNOIE_JOBS");
  add_stoplist_flags(extract, ex.aux_list, ex.adverb_list);

  ScoreOptions sc;
  auto* score = app.add_subcommand("score", "Score extractions against gold triples");
  score->add_option("--extractions", sc.extractions, "Extractions JSONL")->required()->check(CLI::ExistingFile);
  score->add_option("--gold", sc.gold, "Gold TSV (standard) or JSONL (factual)")->required()->check(CLI::ExistingFile);
  score->add_option("--gold-format", sc.gold_format, "tsv | jsonl (default: by extension)")
      ->check(CLI::IsMember({"tsv", "jsonl"}));
  score->add_option("--regime", sc.regime, "lexical | tuple | exact")
      ->capture_default_str()->check(CLI::IsMember({"lexical", "tuple", "exact"}))->envname("ATTNOIE_REGIME");
  score->add_option("--mapping", sc.mapping, "Predicate mapping JSONL (exact regime)")
      ->check(CLI::ExistingFile)->envname("ATTNOIE_MAPPING");
  score->add_flag("--auc", sc.auc, "Also sweep thresholds for AUC and best F1");
  score->add_option("--out", sc.out, "Report JSON path (default: stdout)");
  add_stoplist_flags(score, sc.aux_list, sc.adverb_list);

  KgOptions kg;
  auto* build = app.add_subcommand("build-mapping", "Bootstrap a predicate mapping by PMI^2");
  build->add_option("--extractions", kg.extractions, "Extractions JSONL")->required()->check(CLI::ExistingFile);
  build->add_option("--bundles", kg.bundles, "SentenceBundle JSONL")->required()->check(CLI::ExistingFile);
  build->add_option("--dict", kg.dict, "Mention dictionary TSV")->required()->check(CLI::ExistingFile);
  build->add_option("--kg", kg.kg, "KG triples TSV")->required()->check(CLI::ExistingFile);
  build->add_option("--seed", kg.seed, "Seed mapping JSONL")->check(CLI::ExistingFile);
  build->add_option("--reject", kg.reject, "Reject list (phrase<TAB>predicate)")->check(CLI::ExistingFile);
  build->add_option("--pmi-threshold", kg.pmi_threshold, "Admit pairs with PMI^2 >= this")
      ->capture_default_str()->envname("ATTNOIE_PMI_THRESHOLD");
  build->add_option("--out", kg.out, "Output mapping JSONL")->required();
  add_stoplist_flags(build, kg.aux_list, kg.adverb_list);

  auto* link = app.add_subcommand("link", "Link entity mentions in bundles");
  link->add_option("--bundles", kg.bundles, "SentenceBundle JSONL")->required()->check(CLI::ExistingFile);
  link->add_option("--dict", kg.dict, "Mention dictionary TSV")->required()->check(CLI::ExistingFile);
  link->add_option("--out", kg.out, "Output JSONL")->required();

  auto* align = app.add_subcommand("align", "Distant-supervision gold triples from a KG");
  align->add_option("--bundles", kg.bundles, "SentenceBundle JSONL")->required()->check(CLI::ExistingFile);
  align->add_option("--dict", kg.dict, "Mention dictionary TSV")->required()->check(CLI::ExistingFile);
  align->add_option("--kg", kg.kg, "KG triples TSV")->required()->check(CLI::ExistingFile);
  align->add_option("--out", kg.out, "Output gold JSONL")->required();
  align->add_option("--sample", kg.sample, "Also emit N random aligned pairs for manual review");
  align->add_option("--sample-seed", kg.sample_seed, "RNG seed for --sample")->capture_default_str();
  align->add_option("--sample-out", kg.sample_out, "Review sample JSONL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*extract) return run_extract(ex);
    if (*score) return run_score(sc);
    if (*build) return run_build_mapping(kg);
    if (*link) return run_link(kg);
    if (*align) return run_align(kg);
  } catch (const Error& e) {
    std::cerr << "attnoie: " << e.what() << "\n";
    return e.code() == ErrorCode::kInvariant ? kInternal : kInput;
  } catch (const std::exception& e) {
    std::cerr << "attnoie: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
