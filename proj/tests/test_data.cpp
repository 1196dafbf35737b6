#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "remix/data.hpp"

using namespace remix;

namespace {

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "remix_data_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_bytes(const std::string& name, const std::vector<uint8_t>& bytes) {
  const auto path = scratch_dir() / name;
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return path.string();
}

void push_be32(std::vector<uint8_t>& bytes, uint32_t v) {
  bytes.push_back(static_cast<uint8_t>(v >> 24));
  bytes.push_back(static_cast<uint8_t>(v >> 16));
  bytes.push_back(static_cast<uint8_t>(v >> 8));
  bytes.push_back(static_cast<uint8_t>(v));
}

std::vector<uint8_t> idx_image_bytes(uint32_t count, uint32_t rows, uint32_t cols) {
  std::vector<uint8_t> bytes;
  push_be32(bytes, 0x00000803u);
  push_be32(bytes, count);
  push_be32(bytes, rows);
  push_be32(bytes, cols);
  for (uint32_t i = 0; i < count * rows * cols; ++i) bytes.push_back(static_cast<uint8_t>(i % 256));
  return bytes;
}

std::vector<uint8_t> idx_label_bytes(const std::vector<uint8_t>& labels) {
  std::vector<uint8_t> bytes;
  push_be32(bytes, 0x00000801u);
  push_be32(bytes, static_cast<uint32_t>(labels.size()));
  bytes.insert(bytes.end(), labels.begin(), labels.end());
  return bytes;
}

}  // namespace

TEST_CASE("idx loader decodes big-endian images and labels", "[data]") {
  const std::string images = write_bytes("ok-images.idx", idx_image_bytes(3, 4, 5));
  const std::string labels = write_bytes("ok-labels.idx", idx_label_bytes({1, 0, 2}));

  Dataset ds = load_idx(images, labels);
  REQUIRE(ds.size() == 3);
  REQUIRE(ds.num_classes == 3);
  REQUIRE(ds.labels == std::vector<int>{1, 0, 2});
  REQUIRE(ds.images[0].height == 4);
  REQUIRE(ds.images[0].width == 5);
  REQUIRE(ds.images[0].channels == 1);
  // byte k of the stream is pixel k, scaled into [0, 1]
  REQUIRE_THAT(ds.images[0].at(0, 0, 0), Catch::Matchers::WithinAbs(0.0f, 1e-7f));
  REQUIRE_THAT(ds.images[0].at(0, 3, 0), Catch::Matchers::WithinAbs(3.0f / 255.0f, 1e-7f));
  REQUIRE_THAT(ds.images[1].at(0, 0, 0), Catch::Matchers::WithinAbs(20.0f / 255.0f, 1e-7f));

  SECTION("bad magic") {
    std::vector<uint8_t> bad = idx_image_bytes(1, 2, 2);
    bad[3] = 0x99;
    const std::string path = write_bytes("bad-magic.idx", bad);
    REQUIRE_THROWS_MATCHES(load_idx_images(path), LoadError,
                           Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("magic")));
    REQUIRE_THROWS_AS(load_idx_labels(images), LoadError);  // image magic in a label slot
  }

  SECTION("truncated payload") {
    std::vector<uint8_t> cut = idx_image_bytes(2, 3, 3);
    cut.resize(cut.size() - 4);
    const std::string path = write_bytes("cut.idx", cut);
    REQUIRE_THROWS_MATCHES(
        load_idx_images(path), LoadError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("truncated")));
  }

  SECTION("truncated header") {
    const std::string path = write_bytes("stub.idx", {0x00, 0x00});
    REQUIRE_THROWS_AS(load_idx_images(path), LoadError);
  }

  SECTION("count mismatch between image and label files") {
    const std::string labels2 = write_bytes("two-labels.idx", idx_label_bytes({1, 0}));
    REQUIRE_THROWS_MATCHES(
        load_idx(images, labels2), LoadError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("counts differ")));
  }

  SECTION("missing file") { REQUIRE_THROWS_AS(load_idx_images("/nonexistent/x.idx"), LoadError); }
}

TEST_CASE("cifar binary loader splits planar records", "[data]") {
  std::vector<uint8_t> bytes;
  for (int rec = 0; rec < 2; ++rec) {
    bytes.push_back(static_cast<uint8_t>(rec == 0 ? 7 : 2));  // label
    for (int plane = 0; plane < 3; ++plane) {
      for (int px = 0; px < 1024; ++px) {
        bytes.push_back(static_cast<uint8_t>((plane * 50 + px + rec) % 256));
      }
    }
  }
  const std::string path = write_bytes("two.cifar", bytes);

  Dataset ds = load_cifar_binary(path);
  REQUIRE(ds.size() == 2);
  REQUIRE(ds.num_classes == 10);
  REQUIRE(ds.labels == std::vector<int>{7, 2});
  REQUIRE(ds.images[0].height == 32);
  REQUIRE(ds.images[0].channels == 3);
  // record 0, pixel (0,0): R byte 0, G byte 50, B byte 100
  REQUIRE_THAT(ds.images[0].at(0, 0, 0), Catch::Matchers::WithinAbs(0.0f, 1e-7f));
  REQUIRE_THAT(ds.images[0].at(0, 0, 1), Catch::Matchers::WithinAbs(50.0f / 255.0f, 1e-7f));
  REQUIRE_THAT(ds.images[0].at(0, 0, 2), Catch::Matchers::WithinAbs(100.0f / 255.0f, 1e-7f));
  // pixel (1, 2) of the R plane is byte 34
  REQUIRE_THAT(ds.images[0].at(1, 2, 0), Catch::Matchers::WithinAbs(34.0f / 255.0f, 1e-7f));
  REQUIRE_THAT(ds.images[1].at(0, 0, 0), Catch::Matchers::WithinAbs(1.0f / 255.0f, 1e-7f));

  SECTION("ragged file size") {
    bytes.push_back(0);
    const std::string ragged = write_bytes("ragged.cifar", bytes);
    REQUIRE_THROWS_MATCHES(load_cifar_binary(ragged), LoadError,
                           Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("3073")));
  }

  SECTION("empty file yields an empty dataset") {
    const std::string empty = write_bytes("empty.cifar", {});
    Dataset none = load_cifar_binary(empty);
    REQUIRE(none.size() == 0);
  }
}

TEST_CASE("synthetic dataset is deterministic and class-separable", "[data]") {
  SynthConfig cfg;
  cfg.count = 300;
  cfg.num_classes = 10;
  cfg.seed = 3;

  Dataset a = synth_dataset(cfg);
  Dataset b = synth_dataset(cfg);
  REQUIRE(a.size() == 300);
  REQUIRE(a.labels == b.labels);
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(max_abs_diff(a.images[i], b.images[i]) == 0.0f);
  }

  SECTION("labels cycle and pixels stay in range") {
    std::map<int, int> counts;
    for (int lbl : a.labels) counts[lbl] += 1;
    for (int cls = 0; cls < 10; ++cls) REQUIRE(counts[cls] == 30);
    for (const Image& im : a.images) {
      for (float v : im.data) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v <= 1.0f);
      }
    }
  }

  SECTION("another seed draws different samples of the same classes") {
    SynthConfig other = cfg;
    other.seed = 4;
    Dataset c = synth_dataset(other);
    REQUIRE(max_abs_diff(a.images[0], c.images[0]) > 1e-4f);

    // nearest centroid fit on seed 3 classifies seed 4 far above chance,
    // so class geometry must be shared across seeds
    const size_t dim = a.images[0].data.size();
    std::vector<std::vector<double>> centroid(10, std::vector<double>(dim, 0.0));
    for (size_t i = 0; i < a.size(); ++i) {
      for (size_t d = 0; d < dim; ++d) centroid[a.labels[i]][d] += a.images[i].data[d];
    }
    for (auto& c0 : centroid) {
      for (double& v : c0) v /= 30.0;
    }
    int hits = 0;
    for (size_t i = 0; i < c.size(); ++i) {
      int best = -1;
      double best_d = 1e300;
      for (int cls = 0; cls < 10; ++cls) {
        double d2 = 0.0;
        for (size_t d = 0; d < dim; ++d) {
          const double delta = c.images[i].data[d] - centroid[cls][d];
          d2 += delta * delta;
        }
        if (d2 < best_d) {
          best_d = d2;
          best = cls;
        }
      }
      if (best == c.labels[i]) ++hits;
    }
    REQUIRE(hits > static_cast<int>(0.5 * static_cast<double>(c.size())));
  }

  SECTION("three-channel variant") {
    SynthConfig rgb = cfg;
    rgb.channels = 3;
    rgb.count = 20;
    Dataset d = synth_dataset(rgb);
    REQUIRE(d.images[0].channels == 3);
    // color channels differ somewhere (per-channel blob amplitudes)
    bool differs = false;
    for (size_t i = 0; i < d.images[0].data.size(); i += 3) {
      if (std::abs(d.images[0].data[i] - d.images[0].data[i + 1]) > 1e-3f) differs = true;
    }
    REQUIRE(differs);
  }

  SECTION("config validation") {
    SynthConfig bad = cfg;
    bad.num_classes = 1;
    REQUIRE_THROWS_AS(synth_dataset(bad), std::invalid_argument);
    bad = cfg;
    bad.channels = 2;
    REQUIRE_THROWS_AS(synth_dataset(bad), std::invalid_argument);
  }
}

TEST_CASE("ssl split stratifies the labeled subset", "[data]") {
  SynthConfig cfg;
  cfg.count = 100;
  cfg.num_classes = 10;
  cfg.seed = 9;
  Dataset data = synth_dataset(cfg);

  SECTION("even quota") {
    SslSplit split = make_ssl_split(data, 40, 1);
    REQUIRE(split.labeled.size() == 40);
    REQUIRE(split.unlabeled.size() == 60);
    std::map<int, int> counts;
    for (int lbl : split.labeled.labels) counts[lbl] += 1;
    for (int cls = 0; cls < 10; ++cls) REQUIRE(counts[cls] == 4);
  }

  SECTION("remainder spreads one extra over some classes") {
    SslSplit split = make_ssl_split(data, 47, 1);
    REQUIRE(split.labeled.size() == 47);
    std::map<int, int> counts;
    for (int lbl : split.labeled.labels) counts[lbl] += 1;
    int fours = 0, fives = 0;
    for (int cls = 0; cls < 10; ++cls) {
      if (counts[cls] == 4) ++fours;
      if (counts[cls] == 5) ++fives;
    }
    REQUIRE(fours == 3);
    REQUIRE(fives == 7);
  }

  SECTION("halves are disjoint and cover the dataset") {
    SslSplit split = make_ssl_split(data, 40, 2);
    REQUIRE(split.labeled.size() + split.unlabeled.size() == data.size());
    // every labeled image appears in the source exactly once and never in
    // the unlabeled half; noise makes synth images pairwise distinct
    for (const Image& li : split.labeled.images) {
      int in_source = 0;
      for (const Image& si : data.images) {
        if (max_abs_diff(li, si) == 0.0f) ++in_source;
      }
      REQUIRE(in_source == 1);
      for (const Image& ui : split.unlabeled.images) {
        REQUIRE(max_abs_diff(li, ui) > 0.0f);
      }
    }
  }

  SECTION("seed changes the picks, same seed repeats them") {
    SslSplit s1 = make_ssl_split(data, 40, 5);
    SslSplit s2 = make_ssl_split(data, 40, 5);
    SslSplit s3 = make_ssl_split(data, 40, 6);
    float same = 0.0f, cross = 0.0f;
    for (size_t i = 0; i < 40; ++i) {
      same += max_abs_diff(s1.labeled.images[i], s2.labeled.images[i]);
      cross += max_abs_diff(s1.labeled.images[i], s3.labeled.images[i]);
    }
    REQUIRE(same == 0.0f);
    REQUIRE(cross > 0.0f);
  }

  SECTION("taking every example leaves nothing unlabeled") {
    SslSplit split = make_ssl_split(data, 100, 1);
    REQUIRE(split.unlabeled.size() == 0);
  }

  SECTION("contract") {
    REQUIRE_THROWS_AS(make_ssl_split(data, 9, 1), std::invalid_argument);    // fewer than classes
    REQUIRE_THROWS_AS(make_ssl_split(data, 101, 1), std::invalid_argument);  // more than dataset

    Dataset skew;
    skew.num_classes = 2;
    for (int i = 0; i < 4; ++i) {
      skew.images.push_back(Image(4, 4, 1));
      skew.labels.push_back(i < 3 ? 0 : 1);
    }
    REQUIRE_THROWS_AS(make_ssl_split(skew, 4, 1), std::invalid_argument);  // class 1 has 1 example
  }
}

TEST_CASE("batch iterator cycles shuffled permutations", "[data]") {
  SECTION("each epoch touches every index exactly once") {
    BatchIterator it(10, 3, 7, 0);
    std::vector<size_t> draws;
    for (int b = 0; b < 10; ++b) {
      std::vector<size_t> batch = it.next();
      REQUIRE(batch.size() == 3);
      draws.insert(draws.end(), batch.begin(), batch.end());
    }
    std::map<size_t, int> counts;
    for (size_t d : draws) counts[d] += 1;
    REQUIRE(counts.size() == 10);
    for (const auto& [idx, n] : counts) {
      REQUIRE(idx < 10);
      REQUIRE(n == 3);
    }
    REQUIRE(it.epoch() == 2);
  }

  SECTION("pool smaller than the batch wraps within one call") {
    BatchIterator it(3, 5, 7, 0);
    std::vector<size_t> batch = it.next();
    REQUIRE(batch.size() == 5);
    std::map<size_t, int> counts;
    for (size_t d : batch) counts[d] += 1;
    REQUIRE(counts.size() == 3);  // all three indices present
  }

  SECTION("epochs reshuffle") {
    BatchIterator it(16, 16, 11, 0);
    const std::vector<size_t> first = it.next();
    const std::vector<size_t> second = it.next();
    REQUIRE(first != second);
    std::vector<size_t> sorted_a = first, sorted_b = second;
    std::sort(sorted_a.begin(), sorted_a.end());
    std::sort(sorted_b.begin(), sorted_b.end());
    REQUIRE(sorted_a == sorted_b);
  }

  SECTION("same seed and stream repeat the sequence") {
    BatchIterator a(10, 4, 13, 2);
    BatchIterator b(10, 4, 13, 2);
    BatchIterator c(10, 4, 13, 3);
    bool stream_differs = false;
    for (int i = 0; i < 5; ++i) {
      REQUIRE(a.next() == b.next());
      if (a.pool() && b.pool()) {
        // consume c in lockstep; a differing draw shows streams are independent
      }
    }
    BatchIterator a2(10, 4, 13, 2);
    for (int i = 0; i < 5; ++i) {
      if (a2.next() != c.next()) stream_differs = true;
    }
    REQUIRE(stream_differs);
  }

  SECTION("contract") {
    REQUIRE_THROWS_AS(BatchIterator(0, 4, 1, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(BatchIterator(4, 0, 1, 0), std::invalid_argument);
  }
}
