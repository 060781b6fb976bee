#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "favscan/common.hpp"
#include "favscan/delta.hpp"
#include "favscan/fav.hpp"
#include "favscan/manifest.hpp"
#include "favscan/mapping.hpp"
#include "favscan/peersim.hpp"
#include "favscan/sawa.hpp"
#include "favscan/snapstore.hpp"

namespace favscan::pipeline {

struct Params {
  sawa::SawaParams sawa_params;
  std::uint64_t min_gap_length = 16;
  fav::FavOptions fav_options;
  bool flag_all_delta = false;  // bypass the prefilter: every delta byte is suspicious
};

struct Confusion {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }

  // Degenerate 0/0 cases are defined as 1.0: no positives predicted and none
  // labeled is a perfect outcome.
  double accuracy() const { return total() == 0 ? 1.0 : static_cast<double>(tp + tn) / total(); }
  double precision() const { return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp); }
  double recall() const { return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
};

struct StageTimings {
  double delta_s = 0, sawa_s = 0, mapping_s = 0, fav_s = 0, output_s = 0;
  double total_s = 0;

  double stage_sum() const { return delta_s + sawa_s + mapping_s + fav_s + output_s; }
};

struct DetectionReport {
  EpochId from_epoch = 0;
  EpochId to_epoch = 0;
  Params params;

  std::vector<fav::Verdict> verdicts;             // every file in the layout, path order
  std::vector<sawa::SuspiciousRange> suspicious;  // flagged device ranges
  std::vector<ByteRange> forwarded_ranges;        // small delta payloads, forwarded whole
  std::vector<ByteRange> unmapped;                // flagged bytes outside any file
  std::vector<std::uint64_t> flagged_blocks;      // device blocks under any flagged span
  std::vector<std::uint64_t> population_blocks;   // all blocks of dirty extents

  StageTimings timings;

  bool scored = false;
  Confusion block_level;
  Confusion file_level;

  bool detections_present() const {
    return std::any_of(verdicts.begin(), verdicts.end(), [](const fav::Verdict& v) {
      return v.decision == fav::Decision::Suspicious;
    });
  }

  std::vector<std::string> suspicious_paths() const {
    std::vector<std::string> out;
    for (const auto& v : verdicts) {
      if (v.decision == fav::Decision::Suspicious) out.push_back(v.path);
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json verdicts_json = nlohmann::json::array();
    for (const auto& v : verdicts) {
      nlohmann::json findings = nlohmann::json::array();
      for (const auto& f : v.findings) {
        findings.push_back({{"offset", f.range.offset},
                            {"length", f.range.length},
                            {"note", f.note},
                            {"chi2", f.chi2}});
      }
      verdicts_json.push_back({{"path", v.path},
                               {"decision", v.decision == fav::Decision::Suspicious ? "suspicious" : "benign"},
                               {"reasons", v.reasons},
                               {"findings", findings}});
    }
    nlohmann::json j = {
        {"schema_version", 1},
        {"from_epoch", from_epoch},
        {"to_epoch", to_epoch},
        {"params",
         {{"sawa_window", params.sawa_params.window},
          {"sawa_stride", params.sawa_params.stride},
          {"sawa_tau", params.sawa_params.tau},
          {"min_gap_length", params.min_gap_length},
          {"gap_size_limit", params.fav_options.gap_size_limit},
          {"fav_depth", params.fav_options.max_depth},
          {"fav_byte_budget", params.fav_options.byte_budget},
          {"nlp_heuristic", params.fav_options.nlp_heuristic},
          {"flag_all_delta", params.flag_all_delta},
          {"block_negative_population", "dirty-extent blocks not labeled encrypted"}}},
        {"verdicts", verdicts_json},
        {"flagged_block_count", flagged_blocks.size()},
        {"population_block_count", population_blocks.size()},
        {"unmapped_range_count", unmapped.size()},
        {"timings",
         {{"delta_s", timings.delta_s},
          {"sawa_s", timings.sawa_s},
          {"mapping_s", timings.mapping_s},
          {"fav_s", timings.fav_s},
          {"output_s", timings.output_s},
          {"total_s", timings.total_s}}},
    };
    if (scored) {
      auto confusion_json = [](const Confusion& c) {
        return nlohmann::json{{"tp", c.tp},       {"tn", c.tn},           {"fp", c.fp},
                              {"fn", c.fn},       {"accuracy", c.accuracy()}, {"precision", c.precision()},
                              {"recall", c.recall()}, {"f1", c.f1()}};
      };
      j["block_level"] = confusion_json(block_level);
      j["file_level"] = confusion_json(file_level);
    }
    return j;
  }

  std::string to_table() const {
    std::ostringstream out;
    out << "Epoch window: [" << from_epoch << ", " << to_epoch << "]\n";
    if (scored) {
      auto row = [&](const char* level, const Confusion& c) {
        out << level << "  TP " << c.tp << "  TN " << c.tn << "  FP " << c.fp << "  FN " << c.fn
            << "  acc " << c.accuracy() * 100 << "%  prec " << c.precision() * 100 << "%  rec "
            << c.recall() * 100 << "%  f1 " << c.f1() * 100 << "%\n";
      };
      row("Block-level", block_level);
      row("File-level ", file_level);
    } else {
      out << "Flagged blocks: " << flagged_blocks.size() << " of "
          << population_blocks.size() << " dirty-extent blocks\n";
      out << "Suspicious files: " << suspicious_paths().size() << " of " << verdicts.size() << "\n";
    }
    out << "Time (s)  Delta " << timings.delta_s << "  SAWA " << timings.sawa_s << "  Mapping "
        << timings.mapping_s << "  FAV " << timings.fav_s << "  Output " << timings.output_s
        << "  Total " << timings.total_s << "\n";
    for (const auto& v : verdicts) {
      if (v.decision != fav::Decision::Suspicious) continue;
      out << "  suspicious: " << v.path << " [";
      for (std::size_t i = 0; i < v.reasons.size(); ++i) {
        out << (i ? ", " : "") << v.reasons[i];
      }
      out << "]\n";
    }
    return out.str();
  }
};

namespace detail {

inline std::vector<std::uint64_t> blocks_under(const std::vector<sawa::SuspiciousRange>& ranges,
                                               const std::vector<ByteRange>& forwarded) {
  std::vector<std::uint64_t> blocks;
  auto add = [&](std::uint64_t offset, std::uint64_t length) {
    if (length == 0) return;
    for (std::uint64_t b = offset / kBlockSize; b * kBlockSize < offset + length; ++b) {
      blocks.push_back(b);
    }
  };
  for (const auto& r : ranges) add(r.device_offset, r.length);
  for (const auto& r : forwarded) add(r.offset, r.length);
  std::sort(blocks.begin(), blocks.end());
  blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
  return blocks;
}

}  // namespace detail

// Runs delta extraction, the SAWA prefilter, block-to-file mapping with
// whitelisting, and format-aware validation over the epoch window. Verdicts
// only; confusion matrices are filled in by score().
inline DetectionReport detect(const snapstore::SnapshotStore& store, EpochId e_i, EpochId e_j,
                              const mapping::LayoutManifest& layout,
                              const manifest::TrustedManifest& trusted, const Params& params) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };

  DetectionReport report;
  report.from_epoch = e_i;
  report.to_epoch = e_j;
  report.params = params;

  const auto t0 = clock::now();
  const delta::DeltaSnapshot deltas = delta::extract_delta(store, e_i, e_j, params.min_gap_length);
  const snapstore::BlockImage image = store.reconstruct(e_j);
  const snapstore::DirtyBitmap dirty = store.union_bitmaps(e_i, e_j);
  for (const delta::Extent& extent : delta::group_by_extent(dirty)) {
    for (std::uint64_t b = 0; b < kBlocksPerExtent; ++b) {
      const std::uint64_t block = extent.extent_id * kBlocksPerExtent + b;
      if (block < store.block_count()) report.population_blocks.push_back(block);
    }
  }
  const auto t1 = clock::now();

  sawa::AnalysisResult analysis;
  if (params.flag_all_delta) {
    for (const auto& d : deltas.deltas) {
      sawa::SuspiciousRange r;
      r.device_offset = d.device_offset;
      r.length = d.length();
      r.chi2_final = -1.0;
      r.covered_blocks = sawa::detail::cover_blocks(r.device_offset, r.length);
      analysis.suspicious.push_back(std::move(r));
    }
  } else {
    analysis = sawa::analyze(deltas, params.sawa_params);
  }
  const auto t2 = clock::now();

  const mapping::IntervalIndex index = mapping::IntervalIndex::build(layout);
  const mapping::MappedRegions mapped =
      mapping::map_ranges(index, analysis.suspicious, analysis.forwarded_small);
  const auto t3 = clock::now();

  std::vector<const mapping::FileLayout*> files;
  for (const auto& f : layout.files) files.push_back(&f);
  std::sort(files.begin(), files.end(),
            [](const mapping::FileLayout* a, const mapping::FileLayout* b) { return a->path < b->path; });
  for (const mapping::FileLayout* file : files) {
    const mapping::FileRegion* region = nullptr;
    for (const auto& r : mapped.regions) {
      if (r.path == file->path) {
        region = &r;
        break;
      }
    }
    if (!region) {
      fav::Verdict v;
      v.path = file->path;
      report.verdicts.push_back(std::move(v));
      continue;
    }
    const auto view = mapping::file_view_from_image(image, *file);
    const Bytes copy = view ? Bytes{} : mapping::read_file_from_image(image, *file);
    report.verdicts.push_back(fav::dispatch(file->path, view ? *view : ByteSpan(copy),
                                            region->ranges, trusted, params.fav_options));
  }
  const auto t4 = clock::now();

  report.suspicious = std::move(analysis.suspicious);
  for (const auto& d : analysis.forwarded_small) {
    report.forwarded_ranges.push_back({d.device_offset, d.length()});
  }
  report.unmapped = mapped.unmapped;
  report.flagged_blocks = detail::blocks_under(report.suspicious, report.forwarded_ranges);
  // Serialization is part of the measured pipeline.
  const std::string rendered = report.to_json().dump();
  (void)rendered;
  const auto t5 = clock::now();

  report.timings.delta_s = seconds(t0, t1);
  report.timings.sawa_s = seconds(t1, t2);
  report.timings.mapping_s = seconds(t2, t3);
  report.timings.fav_s = seconds(t3, t4);
  report.timings.output_s = seconds(t4, t5);
  report.timings.total_s = seconds(t0, t5);
  return report;
}

// Fills both confusion matrices from ground truth. Block negatives are the
// dirty-extent blocks not labeled encrypted; file negatives are the layout
// files not labeled as encrypted clones.
inline void score(DetectionReport& report, const peersim::GroundTruth& truth) {
  const std::set<std::uint64_t> population(report.population_blocks.begin(),
                                           report.population_blocks.end());
  const std::set<std::uint64_t> flagged(report.flagged_blocks.begin(), report.flagged_blocks.end());
  const std::set<std::uint64_t> encrypted(truth.encrypted_blocks.begin(),
                                          truth.encrypted_blocks.end());
  for (std::uint64_t b : encrypted) {
    if (!population.count(b)) {
      throw ArgumentError("ground-truth block " + std::to_string(b) +
                          " is outside the dirty-extent population");
    }
  }
  Confusion block;
  for (std::uint64_t b : population) {
    const bool is_positive = encrypted.count(b) > 0;
    const bool is_flagged = flagged.count(b) > 0;
    if (is_positive && is_flagged) ++block.tp;
    else if (is_positive) ++block.fn;
    else if (is_flagged) ++block.fp;
    else ++block.tn;
  }

  std::set<std::string> positive_paths;
  for (const auto& f : truth.files) {
    if (!f.ranges.empty()) positive_paths.insert(f.path);
  }
  std::set<std::string> verdict_paths;
  for (const auto& v : report.verdicts) verdict_paths.insert(v.path);
  for (const auto& path : positive_paths) {
    if (!verdict_paths.count(path)) {
      throw ArgumentError("ground-truth file missing from verdicts: " + path);
    }
  }
  Confusion file;
  for (const auto& v : report.verdicts) {
    const bool is_positive = positive_paths.count(v.path) > 0;
    const bool is_flagged = v.decision == fav::Decision::Suspicious;
    if (is_positive && is_flagged) ++file.tp;
    else if (is_positive) ++file.fn;
    else if (is_flagged) ++file.fp;
    else ++file.tn;
  }

  report.block_level = block;
  report.file_level = file;
  report.scored = true;
}

}  // namespace favscan::pipeline
