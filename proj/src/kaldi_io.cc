// src/kaldi_io.cc

// Copyright 2024  The sidkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "sidkit/kaldi_io.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sidkit/error.h"

namespace sidkit::kaldi_io {

namespace {

// This code assumes a little-endian host, like the rest of the Kaldi
// binary-format ecosystem.
static_assert(sizeof(float) == 4 && sizeof(std::int32_t) == 4);

[[noreturn]] void format_error(const std::string &path, std::uint64_t offset,
                               const std::string &what) {
  throw DataError("ark \"" + path + "\": " + what + " at byte offset " +
                  std::to_string(offset));
}

class ArkReader {
 public:
  ArkReader(const std::string &path, std::istream &is)
      : path_(path), is_(is) {}

  std::uint64_t offset() const { return offset_; }
  bool at_eof() { return is_.peek() == EOF; }

  // Reads "<key> " and leaves the stream at the binary marker.
  std::string read_key() {
    std::string key;
    int c;
    while ((c = is_.get()) != EOF) {
      if (c == ' ') break;
      if (std::isspace(c))
        format_error(path_, offset_,
                     "whitespace inside key \"" + key + "\"");
      key.push_back(static_cast<char>(c));
      ++offset_;
    }
    if (c == EOF)
      format_error(path_, offset_, "unexpected end of file while reading key");
    ++offset_;  // the delimiting space
    if (key.empty()) format_error(path_, offset_, "empty key");
    return key;
  }

  // The part after "key ": 0x00 'B' then an "FV "/"FM " header and payload.
  ArkEntry read_body(const std::string &key) {
    ArkEntry entry;
    entry.key = key;
    expect_bytes("\x00" "B", 2, "binary-mode marker \\0B");
    char token[3];
    read_raw(token, 3, "payload token");
    if (std::memcmp(token, "FV ", 3) == 0) {
      entry.kind = ArkEntry::Kind::kVector;
      entry.cols = read_int32("vector dimension");
      if (entry.cols <= 0)
        format_error(path_, offset_, "non-positive vector dimension for key \"" +
                                         key + "\"");
      read_floats(entry.data, static_cast<std::size_t>(entry.cols));
    } else if (std::memcmp(token, "FM ", 3) == 0) {
      entry.kind = ArkEntry::Kind::kMatrix;
      entry.rows = read_int32("matrix rows");
      entry.cols = read_int32("matrix cols");
      if (entry.rows <= 0 || entry.cols <= 0)
        format_error(path_, offset_,
                     "non-positive matrix dimensions for key \"" + key + "\"");
      read_floats(entry.data, static_cast<std::size_t>(entry.rows) *
                                  static_cast<std::size_t>(entry.cols));
    } else {
      format_error(path_, offset_,
                   "unknown payload token (expected \"FV \" or \"FM \")");
    }
    return entry;
  }

 private:
  void read_raw(char *buf, std::size_t n, const char *what) {
    is_.read(buf, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n)
      format_error(path_, offset_,
                   std::string("truncated file while reading ") + what);
    offset_ += n;
  }

  void expect_bytes(const char *expected, std::size_t n, const char *what) {
    char buf[8];
    std::uint64_t at = offset_;
    read_raw(buf, n, what);
    if (std::memcmp(buf, expected, n) != 0)
      format_error(path_, at, std::string("expected ") + what);
  }

  std::int32_t read_int32(const char *what) {
    expect_bytes("\x04", 1, "int32 size marker 0x04");
    char buf[4];
    read_raw(buf, 4, what);
    std::int32_t v;
    std::memcpy(&v, buf, 4);
    return v;
  }

  void read_floats(std::vector<float> &out, std::size_t n) {
    out.resize(n);
    is_.read(reinterpret_cast<char *>(out.data()),
             static_cast<std::streamsize>(n * sizeof(float)));
    if (static_cast<std::size_t>(is_.gcount()) != n * sizeof(float))
      format_error(path_, offset_, "truncated file while reading float data");
    offset_ += n * sizeof(float);
  }

  std::string path_;
  std::istream &is_;
  std::uint64_t offset_ = 0;
};

std::ifstream open_binary(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open \"" + path + "\" for reading");
  return is;
}

std::ofstream create_binary(const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open \"" + path + "\" for writing");
  return os;
}

void write_entry_body(std::ostream &os, const ArkEntry &entry) {
  os.write("\x00" "B", 2);
  auto put_int32 = [&os](std::int32_t v) {
    os.put('\x04');
    os.write(reinterpret_cast<const char *>(&v), 4);
  };
  if (entry.kind == ArkEntry::Kind::kVector) {
    os.write("FV ", 3);
    put_int32(entry.cols);
  } else {
    os.write("FM ", 3);
    put_int32(entry.rows);
    put_int32(entry.cols);
  }
  os.write(reinterpret_cast<const char *>(entry.data.data()),
           static_cast<std::streamsize>(entry.data.size() * sizeof(float)));
}

void write_entries(const std::vector<ArkEntry> &entries,
                   const std::string &ark_path, const std::string &scp_path) {
  std::ofstream ark = create_binary(ark_path);
  std::ofstream scp;
  if (!scp_path.empty()) {
    scp.open(scp_path);
    if (!scp) throw DataError("cannot open \"" + scp_path + "\" for writing");
  }
  std::uint64_t offset = 0;
  for (const ArkEntry &entry : entries) {
    ark.write(entry.key.data(),
              static_cast<std::streamsize>(entry.key.size()));
    ark.put(' ');
    offset += entry.key.size() + 1;
    if (!scp_path.empty())
      scp << entry.key << ' ' << ark_path << ':' << offset << '\n';
    write_entry_body(ark, entry);
    std::size_t header = 2 + 3 + 5 + (entry.kind == ArkEntry::Kind::kMatrix ? 5 : 0);
    offset += header + entry.data.size() * sizeof(float);
  }
  if (!ark) throw DataError("write failed on \"" + ark_path + "\"");
}

std::vector<std::string> split_fields(const std::string &line) {
  std::vector<std::string> fields;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) fields.push_back(tok);
  return fields;
}

[[noreturn]] void parse_error(const std::string &path, std::size_t line_no,
                              const std::string &what) {
  throw DataError("\"" + path + "\" line " + std::to_string(line_no) + ": " +
                  what);
}

double parse_double(const std::string &path, std::size_t line_no,
                    const std::string &tok, const char *what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size() || !std::isfinite(v)) throw std::invalid_argument("");
    return v;
  } catch (const std::exception &) {
    parse_error(path, line_no,
                std::string("cannot parse ") + what + " \"" + tok + "\"");
  }
}

std::ifstream open_text(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open \"" + path + "\" for reading");
  return is;
}

}  // namespace

std::vector<ArkEntry> read_ark_entries(const std::string &path) {
  std::ifstream is = open_binary(path);
  ArkReader reader(path, is);
  std::vector<ArkEntry> entries;
  while (!reader.at_eof()) {
    std::string key = reader.read_key();
    entries.push_back(reader.read_body(key));
  }
  return entries;
}

EmbeddingSet read_ark(const std::string &path) {
  std::ifstream is = open_binary(path);
  ArkReader reader(path, is);
  EmbeddingSet set;
  while (!reader.at_eof()) {
    std::string key = reader.read_key();
    ArkEntry entry = reader.read_body(key);
    if (entry.kind != ArkEntry::Kind::kVector)
      throw DataError("ark \"" + path + "\": entry \"" + key +
                      "\" is a matrix, expected vectors only");
    set.add(entry.key, entry.data);  // checks dim, duplicates, finiteness
  }
  return set;
}

void write_ark(const EmbeddingSet &set, const std::string &ark_path,
               const std::string &scp_path) {
  std::vector<ArkEntry> entries;
  entries.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    ArkEntry e;
    e.key = set.key(i);
    e.kind = ArkEntry::Kind::kVector;
    e.cols = set.dim();
    auto row = set.row(i);
    e.data.assign(row.begin(), row.end());
    entries.push_back(std::move(e));
  }
  write_entries(entries, ark_path, scp_path);
}

void write_ark(const std::vector<ArkEntry> &entries,
               const std::string &ark_path, const std::string &scp_path) {
  write_entries(entries, ark_path, scp_path);
}

ArkEntry read_ark_entry_at(const std::string &ark_path, std::uint64_t offset,
                           const std::string &key) {
  std::ifstream is = open_binary(ark_path);
  is.seekg(static_cast<std::streamoff>(offset));
  if (!is)
    throw DataError("ark \"" + ark_path + "\": cannot seek to offset " +
                    std::to_string(offset));
  ArkReader reader(ark_path, is);
  return reader.read_body(key);
}

EmbeddingSet read_scp(const std::string &path) {
  std::ifstream is = open_text(path);
  EmbeddingSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::vector<std::string> fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 2)
      parse_error(path, line_no, "expected \"key ark:offset\"");
    std::size_t colon = fields[1].rfind(':');
    if (colon == std::string::npos)
      parse_error(path, line_no, "missing ':offset' in \"" + fields[1] + "\"");
    std::string ark_path = fields[1].substr(0, colon);
    std::uint64_t offset = 0;
    try {
      offset = std::stoull(fields[1].substr(colon + 1));
    } catch (const std::exception &) {
      parse_error(path, line_no, "cannot parse offset in \"" + fields[1] + "\"");
    }
    ArkEntry entry = read_ark_entry_at(ark_path, offset, fields[0]);
    if (entry.kind != ArkEntry::Kind::kVector)
      parse_error(path, line_no, "entry \"" + fields[0] + "\" is not a vector");
    set.add(entry.key, entry.data);
  }
  return set;
}

EmbeddingSet read_embeddings(const std::string &path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".scp") == 0)
    return read_scp(path);
  return read_ark(path);
}

TrialList read_trials(const std::string &path) {
  std::ifstream is = open_text(path);
  TrialList list;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::vector<std::string> fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 2 && fields.size() != 3)
      parse_error(path, line_no, "expected \"enroll test [label]\", got " +
                                     std::to_string(fields.size()) +
                                     " fields");
    Trial t;
    t.enroll = fields[0];
    t.test = fields[1];
    if (fields.size() == 2) {
      t.label = TrialLabel::kUnknown;
    } else if (fields[2] == "target" || fields[2] == "1") {
      t.label = TrialLabel::kTarget;
    } else if (fields[2] == "nontarget" || fields[2] == "0") {
      t.label = TrialLabel::kNontarget;
    } else {
      parse_error(path, line_no, "unknown trial label \"" + fields[2] + "\"");
    }
    list.trials.push_back(std::move(t));
  }
  return list;
}

ScoreList read_scores(const std::string &path) {
  std::ifstream is = open_text(path);
  ScoreList list;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::vector<std::string> fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 3)
      parse_error(path, line_no, "expected \"enroll test score\"");
    ScoredTrial s;
    s.enroll = fields[0];
    s.test = fields[1];
    s.score = parse_double(path, line_no, fields[2], "score");
    list.scores.push_back(std::move(s));
  }
  return list;
}

void write_scores(const ScoreList &scores, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open \"" + path + "\" for writing");
  char buf[64];
  for (const ScoredTrial &s : scores.scores) {
    std::snprintf(buf, sizeof(buf), "%.6f", s.score);
    os << s.enroll << ' ' << s.test << ' ' << buf << '\n';
  }
  if (!os) throw DataError("write failed on \"" + path + "\"");
}

Diarization read_rttm(const std::string &path) {
  std::ifstream is = open_text(path);
  Diarization diar;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::vector<std::string> fields = split_fields(line);
    if (fields.empty() || fields[0] != "SPEAKER") continue;
    if (fields.size() < 8)
      parse_error(path, line_no, "SPEAKER line has too few fields");
    Segment seg;
    seg.recording_id = fields[1];
    seg.start = parse_double(path, line_no, fields[3], "start time");
    double dur = parse_double(path, line_no, fields[4], "duration");
    if (dur <= 0.0)
      parse_error(path, line_no,
                  "non-positive duration " + fields[4]);
    seg.end = seg.start + dur;
    seg.speaker = fields[7];
    validate_segment(seg);
    diar.segments.push_back(std::move(seg));
  }
  return diar;
}

std::string format_rttm(const Diarization &diar) {
  std::string out;
  char buf[64];
  for (const Segment &seg : diar.segments) {
    out += "SPEAKER " + seg.recording_id + " 1 ";
    std::snprintf(buf, sizeof(buf), "%.3f %.3f", seg.start,
                  seg.end - seg.start);
    out += buf;
    out += " <NA> <NA> " + seg.speaker + " <NA> <NA>\n";
  }
  return out;
}

void write_rttm(const Diarization &diar, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open \"" + path + "\" for writing");
  os << format_rttm(diar);
  if (!os) throw DataError("write failed on \"" + path + "\"");
}

std::vector<Segment> read_lab(const std::string &path,
                              const std::string &recording_id) {
  std::ifstream is = open_text(path);
  std::vector<Segment> segments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::vector<std::string> fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 3)
      parse_error(path, line_no, "expected \"start end sp\"");
    Segment seg;
    seg.recording_id = recording_id;
    seg.start = parse_double(path, line_no, fields[0], "start time");
    seg.end = parse_double(path, line_no, fields[1], "end time");
    if (seg.end <= seg.start)
      parse_error(path, line_no, "segment end " + fields[1] +
                                     " is not after start " + fields[0]);
    validate_segment(seg);
    segments.push_back(std::move(seg));
  }
  std::stable_sort(segments.begin(), segments.end(),
                   [](const Segment &a, const Segment &b) {
                     return a.start < b.start;
                   });
  return segments;
}

SpeakerMap read_utt2spk(const std::string &path) {
  std::ifstream is = open_text(path);
  SpeakerMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::vector<std::string> fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 2)
      parse_error(path, line_no, "expected \"utt spk\"");
    map.add(fields[0], fields[1]);
  }
  return map;
}

}  // namespace sidkit::kaldi_io
