#ifndef PIKL_HARNESS_DATASET_H_
#define PIKL_HARNESS_DATASET_H_

#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "pikl/hanabi/record.h"

namespace pikl::harness {

// One GameRecord per line, compact JSON, in the order appended.
class DatasetWriter {
 public:
  // Truncates `path`. Throws ConfigError if it cannot be opened.
  explicit DatasetWriter(const std::string& path, bool append = false);
  explicit DatasetWriter(std::ostream* out) : out_(out) {}
  void Write(const hanabi::GameRecord& rec);
  void Flush();
  int64_t written() const { return written_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
  int64_t written_ = 0;
};

// Calls `fn` per record; blank lines are skipped. A bad line throws
// FormatError carrying its 1-based line number. Records are replayed and
// checked unless `validate` is false.
void ReadDataset(std::istream& in, const std::function<void(hanabi::GameRecord&&)>& fn,
                 bool validate = true);
std::vector<hanabi::GameRecord> ReadDataset(const std::string& path, bool validate = true);
void WriteDataset(const std::string& path, const std::vector<hanabi::GameRecord>& records);

}  // namespace pikl::harness

#endif  // PIKL_HARNESS_DATASET_H_
