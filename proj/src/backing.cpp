// Copyright 2026 The aeadfde Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aeadfde/backing.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

#include "aeadfde/error.hpp"

namespace aeadfde {

namespace {

[[noreturn]] void throw_errno(const std::string& what)
{
    throw Error(Errc::io_error, what + ": " + std::strerror(errno));
}

void check_range(std::uint64_t offset, std::size_t length, std::uint64_t size)
{
    if (offset > size || length > size - offset) {
        throw Error(Errc::io_error, "access [" + std::to_string(offset) + ", +" + std::to_string(length) +
                                        ") beyond store of " + std::to_string(size) + " bytes");
    }
}

} // namespace

FileBacking::FileBacking(const std::filesystem::path& path)
{
    fd_ = ::open(path.c_str(), O_RDWR | O_CLOEXEC);
    if (fd_ < 0) {
        throw_errno("open " + path.string());
    }
    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
        const int saved = errno;
        ::close(fd_);
        errno = saved;
        throw_errno("stat " + path.string());
    }
    size_ = static_cast<std::uint64_t>(st.st_size);
}

std::shared_ptr<FileBacking> FileBacking::create(const std::filesystem::path& path, std::uint64_t size)
{
    const int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
    if (fd < 0) {
        throw_errno("create " + path.string());
    }
    if (::ftruncate(fd, static_cast<off_t>(size)) != 0) {
        const int saved = errno;
        ::close(fd);
        errno = saved;
        throw_errno("resize " + path.string());
    }
    ::close(fd);
    return std::make_shared<FileBacking>(path);
}

FileBacking::~FileBacking()
{
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

void FileBacking::read(std::uint64_t offset, ByteSpan out)
{
    check_range(offset, out.size(), size_);
    std::size_t done = 0;
    while (done < out.size()) {
        const auto n = ::pread(fd_, out.data() + done, out.size() - done, static_cast<off_t>(offset + done));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("pread");
        }
        if (n == 0) {
            throw Error(Errc::io_error, "unexpected end of file");
        }
        done += static_cast<std::size_t>(n);
    }
}

void FileBacking::write(std::uint64_t offset, ConstByteSpan in)
{
    check_range(offset, in.size(), size_);
    std::size_t done = 0;
    while (done < in.size()) {
        const auto n = ::pwrite(fd_, in.data() + done, in.size() - done, static_cast<off_t>(offset + done));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("pwrite");
        }
        done += static_cast<std::size_t>(n);
    }
}

void FileBacking::flush()
{
    if (::fdatasync(fd_) != 0) {
        throw_errno("fdatasync");
    }
}

MemoryBacking::MemoryBacking(std::uint64_t size) : bytes_(size) {}

MemoryBacking::MemoryBacking(Bytes image) : bytes_(std::move(image)) {}

void MemoryBacking::read(std::uint64_t offset, ByteSpan out)
{
    check_range(offset, out.size(), bytes_.size());
    std::memcpy(out.data(), bytes_.data() + offset, out.size());
}

void MemoryBacking::write(std::uint64_t offset, ConstByteSpan in)
{
    check_range(offset, in.size(), bytes_.size());
    std::memcpy(bytes_.data() + offset, in.data(), in.size());
}

Bytes MemoryBacking::snapshot() const
{
    return bytes_;
}

void MemoryBacking::restore(ConstByteSpan image)
{
    if (image.size() != bytes_.size()) {
        throw Error(Errc::invalid_argument, "snapshot size does not match store");
    }
    std::memcpy(bytes_.data(), image.data(), image.size());
}

CrashingBacking::CrashingBacking(std::shared_ptr<BackingStore> inner, std::optional<std::uint64_t> crash_after)
    : inner_(std::move(inner)), crash_after_(crash_after)
{
}

void CrashingBacking::arm(std::optional<std::uint64_t> crash_after)
{
    std::lock_guard lock(mutex_);
    crash_after_ = crash_after;
}

void CrashingBacking::read(std::uint64_t offset, ByteSpan out)
{
    {
        std::lock_guard lock(mutex_);
        if (crashed_) throw SimulatedCrash();
    }
    inner_->read(offset, out);
}

void CrashingBacking::write(std::uint64_t offset, ConstByteSpan in)
{
    std::lock_guard lock(mutex_);
    if (crashed_) {
        throw SimulatedCrash();
    }
    if (crash_after_ && written_ + in.size() > *crash_after_) {
        const auto landed = static_cast<std::size_t>(*crash_after_ - written_);
        if (landed > 0) {
            inner_->write(offset, in.first(landed));
        }
        written_ += landed;
        crashed_ = true;
        throw SimulatedCrash();
    }
    inner_->write(offset, in);
    written_ += in.size();
}

void CrashingBacking::flush()
{
    std::lock_guard lock(mutex_);
    if (crashed_) {
        throw SimulatedCrash();
    }
    inner_->flush();
    ++flushes_;
}

} // namespace aeadfde
