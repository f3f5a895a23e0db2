#include "pikl/harness/dataset.h"

#include "pikl/errors.h"

namespace pikl::harness {

DatasetWriter::DatasetWriter(const std::string& path, bool append)
    : file_(path, append ? std::ios::app : std::ios::trunc), out_(&file_) {
  if (!file_) throw ConfigError("cannot open dataset for writing: " + path);
}

void DatasetWriter::Write(const hanabi::GameRecord& rec) {
  *out_ << rec.ToJson().dump() << '\n';
  if (!*out_) throw ConfigError("dataset write failed");
  ++written_;
}

void DatasetWriter::Flush() { out_->flush(); }

void ReadDataset(std::istream& in, const std::function<void(hanabi::GameRecord&&)>& fn,
                 bool validate) {
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    hanabi::GameRecord rec;
    try {
      rec = hanabi::GameRecord::FromJson(nlohmann::json::parse(line));
      if (validate) hanabi::Replay(rec);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("invalid JSON: ") + e.what(), n);
    } catch (const FormatError& e) {
      throw FormatError(e.what(), n);
    } catch (const std::exception& e) {
      throw FormatError(e.what(), n);
    }
    fn(std::move(rec));
  }
}

std::vector<hanabi::GameRecord> ReadDataset(const std::string& path, bool validate) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset: " + path);
  std::vector<hanabi::GameRecord> out;
  ReadDataset(in, [&](hanabi::GameRecord&& r) { out.push_back(std::move(r)); }, validate);
  return out;
}

void WriteDataset(const std::string& path, const std::vector<hanabi::GameRecord>& records) {
  DatasetWriter w(path);
  for (const auto& r : records) w.Write(r);
  w.Flush();
}

}  // namespace pikl::harness
