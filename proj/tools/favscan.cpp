// favscan: snapshot-based detection of partial-encryption tampering.
//
// Typical flow:
//   favscan gencorpus --kind mixed --out corpus/ --seed 7
//   favscan init --corpus corpus/ --store store/ --layout layout.json
//   favscan manifest build corpus/ -o manifest.json
//   favscan simulate --store store/ --layout layout.json --pattern skip:4096,4096 \
//       --seed 7 --key-hex <64 hex chars> --ground-truth truth.json
//   favscan detect --store store/ --from-epoch 1 --to-epoch 2 --layout layout.json \
//       --manifest manifest.json --ground-truth truth.json --format table

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "favscan/baselines.hpp"
#include "favscan/corpusgen.hpp"
#include "favscan/delta.hpp"
#include "favscan/fav.hpp"
#include "favscan/hash.hpp"
#include "favscan/manifest.hpp"
#include "favscan/mapping.hpp"
#include "favscan/peersim.hpp"
#include "favscan/pipeline.hpp"
#include "favscan/snapstore.hpp"

namespace fs = std::filesystem;
using namespace favscan;

namespace {

peersim::AttackPattern parse_pattern(const std::string& text) {
  auto split_args = [](const std::string& s) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
      std::size_t comma = s.find(',', pos);
      if (comma == std::string::npos) comma = s.size();
      out.push_back(std::stoull(s.substr(pos, comma - pos)));
      pos = comma + 1;
    }
    return out;
  };
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "fast") {
    const auto args = split_args(rest);
    if (args.size() != 1) throw ArgumentError("usage: fast:<bytes>");
    return peersim::Fast{args[0]};
  }
  if (kind == "skip") {
    const auto args = split_args(rest);
    if (args.size() != 2) throw ArgumentError("usage: skip:<encrypt>,<skip>");
    return peersim::SkipStep{args[0], args[1]};
  }
  if (kind == "animagus") {
    const auto args = split_args(rest);
    if (args.size() != 1) throw ArgumentError("usage: animagus:<percent>");
    return peersim::Animagus{static_cast<std::uint32_t>(args[0])};
  }
  throw ArgumentError("unknown pattern: " + text);
}

std::vector<std::pair<std::string, Bytes>> load_dir(const fs::path& dir) {
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<std::pair<std::string, Bytes>> out;
  for (const auto& p : paths) {
    out.emplace_back(fs::relative(p, dir).generic_string(), read_file(p));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int run(int argc, char** argv) {
  CLI::App app{"favscan: format-aware detection of partial-encryption tampering"};
  app.require_subcommand(1);

  // --- gencorpus -----------------------------------------------------------
  auto* gen = app.add_subcommand("gencorpus", "generate a synthetic corpus");
  std::string gen_kind = "mixed";
  std::string gen_out;
  std::uint64_t gen_seed = 7;
  std::size_t gen_count = 20;
  gen->add_option("--kind", gen_kind, "text|zip|docx|pdf|media|mixed")->capture_default_str();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--count", gen_count, "files per corpus (text/zip/docx/pdf)")->capture_default_str();

  // --- init ----------------------------------------------------------------
  auto* init = app.add_subcommand("init", "create a snapshot store and write a corpus as epoch 1");
  std::string init_corpus, init_store, init_layout;
  std::uint64_t init_image_mib = 0;
  init->add_option("--corpus", init_corpus)->required();
  init->add_option("--store", init_store)->required();
  init->add_option("--layout", init_layout, "layout manifest output")->required();
  init->add_option("--image-mib", init_image_mib, "device size (default: 3x corpus)");

  // --- manifest ------------------------------------------------------------
  auto* man = app.add_subcommand("manifest", "trusted-manifest operations");
  auto* man_build = man->add_subcommand("build", "hash a corpus into a trusted manifest");
  std::string man_corpus, man_out;
  std::vector<std::string> man_exts;
  man_build->add_option("corpus", man_corpus)->required();
  man_build->add_option("-o,--out", man_out)->required();
  man_build->add_option("--media-ext", man_exts, "media extensions (default jpg jpeg png mp3 mp4)");

  // --- simulate ------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "clone and encrypt files as a new epoch");
  std::string sim_store, sim_layout, sim_pattern, sim_key, sim_truth, sim_layout_out;
  std::uint64_t sim_seed = 0;
  std::vector<std::string> sim_clones;
  sim->add_option("--store", sim_store)->required();
  sim->add_option("--layout", sim_layout)->required();
  sim->add_option("--pattern", sim_pattern, "fast:N | skip:N,S | animagus:F | blackbasta")->required();
  sim->add_option("--seed", sim_seed)->capture_default_str();
  sim->add_option("--key-hex", sim_key, "32-byte AES key in hex")->required();
  sim->add_option("--clone", sim_clones, "paths to clone (default: every file in the layout)");
  sim->add_option("--ground-truth", sim_truth, "write ground-truth JSON here");
  sim->add_option("--layout-out", sim_layout_out, "updated layout (default: overwrite --layout)");

  // --- detect --------------------------------------------------------------
  auto* det = app.add_subcommand("detect", "run the detection pipeline over an epoch window");
  std::string det_store, det_layout, det_manifest, det_truth, det_out, det_format = "table";
  std::string det_dump_delta;
  std::uint64_t det_from = 1, det_to = 0;
  pipeline::Params params;
  det->add_option("--store", det_store)->required();
  det->add_option("--from-epoch", det_from)->required();
  det->add_option("--to-epoch", det_to)->required();
  det->add_option("--layout", det_layout)->required();
  det->add_option("--manifest", det_manifest, "trusted manifest JSON");
  det->add_option("--ground-truth", det_truth, "score against this ground truth");
  det->add_option("--sawa-window", params.sawa_params.window)->capture_default_str();
  det->add_option("--sawa-stride", params.sawa_params.stride)->capture_default_str();
  det->add_option("--sawa-tau", params.sawa_params.tau)->capture_default_str();
  det->add_option("--min-gap", params.min_gap_length)->capture_default_str();
  det->add_option("--fav-depth", params.fav_options.max_depth)->capture_default_str();
  det->add_option("--fav-byte-budget", params.fav_options.byte_budget)->capture_default_str();
  det->add_option("--gap-limit", params.fav_options.gap_size_limit)->capture_default_str();
  det->add_flag("--nlp-heuristic", params.fav_options.nlp_heuristic);
  det->add_flag("--flag-all-delta", params.flag_all_delta);
  det->add_option("-o,--out", det_out, "write report JSON here");
  det->add_option("--format", det_format, "table|json")->capture_default_str();
  det->add_option("--dump-delta", det_dump_delta, "write a delta-snapshot debug dump here");

  // --- baseline ------------------------------------------------------------
  auto* base = app.add_subcommand("baseline", "file-level statistical detectors");
  std::string base_method, base_tune, base_eval, base_manifest;
  base->add_option("--method", base_method, "entropy|chi2|fav")->required();
  base->add_option("--tune", base_tune, "clean corpus directory")->required();
  base->add_option("--eval", base_eval, "directory to evaluate")->required();
  base->add_option("--manifest", base_manifest, "trusted manifest (fav method)");

  // --- report --------------------------------------------------------------
  auto* rep = app.add_subcommand("report", "render a saved detection report");
  std::string rep_file, rep_format = "table";
  rep->add_option("report", rep_file)->required();
  rep->add_option("--format", rep_format, "table|json")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*gen) {
    std::vector<corpus::FileSpec> files;
    if (gen_kind == "text") files = corpus::text_corpus(gen_seed, gen_count, 2048, 32768);
    else if (gen_kind == "zip") files = corpus::zip_corpus(gen_seed, gen_count);
    else if (gen_kind == "docx") files = corpus::docx_corpus(gen_seed, gen_count);
    else if (gen_kind == "pdf") files = corpus::pdf_corpus(gen_seed, gen_count);
    else if (gen_kind == "media") files = corpus::media_files(gen_seed);
    else if (gen_kind == "mixed") files = corpus::mixed_corpus(gen_seed);
    else throw ArgumentError("unknown corpus kind: " + gen_kind);
    corpus::write_corpus(gen_out, files);
    std::uint64_t total = 0;
    for (const auto& f : files) total += f.data.size();
    std::cout << "wrote " << files.size() << " files (" << total << " bytes) to " << gen_out << "\n";
    return 0;
  }

  if (*init) {
    const auto files = load_dir(init_corpus);
    std::uint64_t corpus_bytes = 0;
    for (const auto& [path, data] : files) corpus_bytes += data.size();
    const std::uint64_t image_bytes =
        init_image_mib > 0
            ? init_image_mib << 20
            : std::max<std::uint64_t>(corpus_bytes * 3, 16 << 20) / kExtentSize * kExtentSize + kExtentSize;
    auto store = snapstore::SnapshotStore::create(init_store, image_bytes / kBlockSize);
    mapping::EpochWriteCollector collector(store.block_count());
    const auto layout = mapping::layout_from_files(files, collector);
    store.record_epoch(collector.take());
    layout.save(init_layout);
    std::cout << "store " << init_store << ": " << store.block_count() << " blocks, epoch 1 holds "
              << files.size() << " files\n";
    return 0;
  }

  if (*man_build) {
    manifest::TrustedManifest trusted;
    if (man_exts.empty()) {
      trusted = manifest::build_manifest(man_corpus);
    } else {
      trusted = manifest::build_manifest(man_corpus,
                                         std::set<std::string>(man_exts.begin(), man_exts.end()));
    }
    trusted.save(man_out);
    std::cout << "manifest: " << trusted.file_count() << " files, " << trusted.component_count()
              << " components";
    if (!trusted.skipped().empty()) std::cout << ", " << trusted.skipped().size() << " skipped";
    std::cout << "\n";
    return 0;
  }

  if (*sim) {
    auto store = snapstore::SnapshotStore::open(sim_store);
    auto layout = mapping::LayoutManifest::load(sim_layout);
    const auto cipher = peersim::CipherSpec::from_hex(sim_key);
    std::vector<std::string> sources = sim_clones;
    if (sources.empty()) {
      for (const auto& f : layout.files) sources.push_back(f.path);
    }
    peersim::CampaignResult result;
    if (sim_pattern == "blackbasta") {
      result = peersim::run_campaign_blackbasta(store, layout, sources, cipher, sim_seed);
    } else {
      result = peersim::run_campaign(store, layout, sources, parse_pattern(sim_pattern), cipher,
                                     sim_seed);
    }
    layout.save(sim_layout_out.empty() ? sim_layout : sim_layout_out);
    if (!sim_truth.empty()) result.truth.save(sim_truth);
    std::cout << "epoch " << result.epoch << ": " << result.truth.files.size() << " clones, "
              << result.truth.encrypted_blocks.size() << " encrypted blocks, "
              << result.truth.encrypted_bytes() << " encrypted bytes\n";
    return 0;
  }

  if (*det) {
    const auto store = snapstore::SnapshotStore::open(det_store);
    const auto layout = mapping::LayoutManifest::load(det_layout);
    manifest::TrustedManifest trusted;
    if (!det_manifest.empty()) trusted = manifest::TrustedManifest::load(det_manifest);

    if (!det_dump_delta.empty()) {
      const auto deltas = delta::extract_delta(store, det_from, det_to, params.min_gap_length);
      nlohmann::json dump = nlohmann::json::array();
      for (const auto& d : deltas.deltas) {
        dump.push_back({{"device_offset", d.device_offset},
                        {"length", d.length()},
                        {"new_sha256", sha256_hex(d.new_bytes)},
                        {"old_sha256", sha256_hex(d.old_bytes)}});
      }
      write_text(det_dump_delta, dump.dump(2));
    }

    auto report = pipeline::detect(store, det_from, det_to, layout, trusted, params);
    if (!det_truth.empty()) {
      pipeline::score(report, peersim::GroundTruth::load(det_truth));
    }
    if (!det_out.empty()) write_text(det_out, report.to_json().dump(2));
    if (det_format == "json") {
      std::cout << report.to_json().dump(2) << "\n";
    } else {
      std::cout << report.to_table();
    }
    return report.detections_present() ? 2 : 0;
  }

  if (*base) {
    const auto clean = load_dir(base_tune);
    const auto eval = load_dir(base_eval);
    std::size_t flagged = 0;
    if (base_method == "entropy" || base_method == "chi2") {
      const auto tuned = baselines::tune(clean, base_tune);
      std::size_t clean_fp = 0;
      for (const auto& [path, bytes] : clean) {
        const bool hit = base_method == "entropy" ? baselines::entropy_flags(tuned, bytes)
                                                  : baselines::chi2_flags(tuned, bytes);
        clean_fp += hit ? 1 : 0;
      }
      for (const auto& [path, bytes] : eval) {
        const bool hit = base_method == "entropy" ? baselines::entropy_flags(tuned, bytes)
                                                  : baselines::chi2_flags(tuned, bytes);
        flagged += hit ? 1 : 0;
      }
      std::cout << "method=" << base_method << " entropy_thr=" << tuned.entropy_threshold
                << " chi2_thr=" << tuned.chi2_threshold << " clean_fp=" << clean_fp << "\n";
    } else if (base_method == "fav") {
      manifest::TrustedManifest trusted;
      if (!base_manifest.empty()) trusted = manifest::TrustedManifest::load(base_manifest);
      fav::FavOptions opts;
      for (const auto& [path, bytes] : eval) {
        const auto verdict = fav::validate_file(path, bytes, trusted, opts);
        flagged += verdict.decision == fav::Decision::Suspicious ? 1 : 0;
      }
    } else {
      throw ArgumentError("unknown method: " + base_method);
    }
    std::cout << "flagged " << flagged << " / " << eval.size() << " ("
              << (eval.empty() ? 0.0 : 100.0 * flagged / eval.size()) << "%)\n";
    return flagged > 0 ? 2 : 0;
  }

  if (*rep) {
    const Bytes data = read_file(rep_file);
    const auto j = nlohmann::json::parse(data.begin(), data.end());
    if (rep_format == "json") {
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    std::cout << "Epoch window: [" << j.at("from_epoch").get<std::uint64_t>() << ", "
              << j.at("to_epoch").get<std::uint64_t>() << "]\n";
    if (j.contains("block_level")) {
      for (const char* level : {"block_level", "file_level"}) {
        const auto& c = j.at(level);
        std::cout << level << "  TP " << c.at("tp").get<std::uint64_t>() << "  TN "
                  << c.at("tn").get<std::uint64_t>() << "  FP " << c.at("fp").get<std::uint64_t>()
                  << "  FN " << c.at("fn").get<std::uint64_t>() << "  acc "
                  << c.at("accuracy").get<double>() * 100 << "%  prec "
                  << c.at("precision").get<double>() * 100 << "%  rec "
                  << c.at("recall").get<double>() * 100 << "%  f1 "
                  << c.at("f1").get<double>() * 100 << "%\n";
      }
    }
    const auto& t = j.at("timings");
    std::cout << "Time (s)  Delta " << t.at("delta_s").get<double>() << "  SAWA "
              << t.at("sawa_s").get<double>() << "  Mapping " << t.at("mapping_s").get<double>()
              << "  FAV " << t.at("fav_s").get<double>() << "  Output "
              << t.at("output_s").get<double>() << "  Total " << t.at("total_s").get<double>()
              << "\n";
    for (const auto& v : j.at("verdicts")) {
      if (v.at("decision").get<std::string>() != "suspicious") continue;
      std::cout << "  suspicious: " << v.at("path").get<std::string>() << " [";
      bool first = true;
      for (const auto& r : v.at("reasons")) {
        std::cout << (first ? "" : ", ") << r.get<std::string>();
        first = false;
      }
      std::cout << "]\n";
    }
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
