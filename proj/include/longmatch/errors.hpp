#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace longmatch {

// Bad user-supplied data or arguments. The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numeric or internal failure that is not the caller's fault (exit code 1).
class InternalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyDocument : public InputError {
public:
    EmptyDocument() : InputError("document has no non-whitespace content") {}
    explicit EmptyDocument(std::size_t line)
        : InputError("line " + std::to_string(line) + ": document has no non-whitespace content"),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

class ParseError : public InputError {
public:
    ParseError(std::size_t line, const std::string& what)
        : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class LabelError : public InputError {
public:
    LabelError(std::size_t line, long long label)
        : InputError("line " + std::to_string(line) + ": label must be 0 or 1, got " +
                     std::to_string(label)),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class NotStochastic : public InputError {
public:
    NotStochastic(std::size_t col, double sum)
        : InputError("column " + std::to_string(col) + " sums to " + std::to_string(sum)),
          col_(col), sum_(sum) {}
    std::size_t col() const { return col_; }
    double sum() const { return sum_; }

private:
    std::size_t col_;
    double sum_;
};

class NegativeEntry : public InputError {
public:
    NegativeEntry(std::size_t row, std::size_t col)
        : InputError("negative entry at (" + std::to_string(row) + ", " + std::to_string(col) + ")"),
          row_(row), col_(col) {}
    std::size_t row() const { return row_; }
    std::size_t col() const { return col_; }

private:
    std::size_t row_, col_;
};

class SequenceTooShort : public InputError {
public:
    explicit SequenceTooShort(std::size_t max_len)
        : InputError("max_len " + std::to_string(max_len) +
                     " cannot hold [CLS], one token and two [SEP]") {}
};

class ShapeError : public InputError {
public:
    using InputError::InputError;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

class NonFinite : public InternalError {
public:
    explicit NonFinite(const std::string& where) : InternalError("non-finite value in " + where) {}
};

class DivergedAt : public InternalError {
public:
    explicit DivergedAt(std::size_t step)
        : InternalError("training diverged (non-finite loss) at step " + std::to_string(step)),
          step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

}  // namespace longmatch
