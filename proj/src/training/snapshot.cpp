#include "prokd/training/snapshot.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "prokd/error.hpp"

namespace prokd::train {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace {

constexpr const char* magic = "PROKD-SNAPSHOT v1";

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw Error("training", "snapshot truncated");
  return v;
}

std::uint64_t fnv1a(std::istream& in) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace

std::vector<std::size_t> TeacherSnapshot::offsets() const {
  std::vector<std::size_t> out;
  out.reserve(sentence_lengths.size());
  std::size_t at = 0;
  for (auto len : sentence_lengths) {
    out.push_back(at);
    at += len;
  }
  return out;
}

void TeacherSnapshot::check_matches(const corpus::Corpus& corpus) const {
  if (sentence_lengths.size() != corpus.size())
    throw Error("training", "snapshot has " + std::to_string(sentence_lengths.size()) + " sentences, corpus has " +
                                std::to_string(corpus.size()));
  for (std::size_t s = 0; s < corpus.size(); ++s)
    if (sentence_lengths[s] != corpus.sentences[s].size())
      throw Error("training", "snapshot sentence " + std::to_string(s) + " length differs from the corpus");
}

TeacherSnapshot snapshot_teacher(model::NerModel& teacher, const corpus::Corpus& target) {
  const auto& vocab = teacher.vocabulary();
  for (const auto& s : target.sentences)
    for (const auto& t : s.tokens)
      if (!vocab.contains(t))
        throw Error("training", "corpus/vocabulary mismatch: token '" + t + "' unknown to the teacher");
  TeacherSnapshot snap;
  snap.probs = diff::Tensor::matrix(target.token_count(), teacher.config().num_tags);
  std::size_t row = 0;
  for (const auto& s : target.sentences) {
    const auto p = teacher.probabilities(s);
    std::copy(p.values().begin(), p.values().end(), snap.probs.row(row).begin());
    row += s.size();
    snap.sentence_lengths.push_back(s.size());
  }
  return snap;
}

void write_snapshot(std::ostream& out, const TeacherSnapshot& snap) {
  out << magic << '\n';
  put_u64(out, snap.tokens());
  put_u64(out, snap.tags());
  put_u64(out, snap.sentence_lengths.size());
  for (auto len : snap.sentence_lengths) put_u64(out, len);
  out.write(reinterpret_cast<const char*>(snap.probs.data()),
            static_cast<std::streamsize>(snap.probs.size() * sizeof(double)));
  if (!out) throw Error("training", "snapshot write failed");
}

void write_snapshot_file(const std::string& path, const TeacherSnapshot& snap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("training", "cannot write snapshot " + path);
  write_snapshot(out, snap);
}

TeacherSnapshot read_snapshot(std::istream& in) {
  std::string header;
  std::getline(in, header);
  if (header != magic) throw Error("training", "not a PROKD-SNAPSHOT v1 file");
  const auto tokens = get_u64(in), tags = get_u64(in), sentences = get_u64(in);
  if (tokens == 0 || tags == 0) throw Error("training", "snapshot with zero tokens or tags");
  TeacherSnapshot snap;
  std::uint64_t total = 0;
  for (std::uint64_t s = 0; s < sentences; ++s) {
    snap.sentence_lengths.push_back(get_u64(in));
    total += snap.sentence_lengths.back();
  }
  if (total != tokens) throw Error("training", "snapshot sentence lengths do not sum to the token count");
  snap.probs = diff::Tensor::matrix(tokens, tags);
  in.read(reinterpret_cast<char*>(snap.probs.data()), static_cast<std::streamsize>(tokens * tags * sizeof(double)));
  if (!in) throw Error("training", "snapshot truncated");
  return snap;
}

TeacherSnapshot read_snapshot_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("training", "cannot open snapshot " + path);
  return read_snapshot(in);
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("training", "cannot open " + path);
  return fnv1a(in);
}

std::uint64_t snapshot_digest(const TeacherSnapshot& snap) {
  std::stringstream buf;
  write_snapshot(buf, snap);
  return fnv1a(buf);
}

}  // namespace prokd::train
