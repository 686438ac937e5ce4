#!/usr/bin/env python3
"""Build a one-file ``bsid`` executable with PyInstaller"""

import os
import platform
import shutil
import subprocess
import sys
from pathlib import Path

ENTRY_POINT = "src/bsid_cli/__main__.py"
EXECUTABLE = "bsid"

# pycryptodome loads its native cipher/hash modules dynamically
COLLECT = ["Crypto", "simpy"]


def run_command(cmd, description=""):
    print(f"▶ {description}")
    result = subprocess.run(cmd, capture_output=True, text=True)
    if result.returncode != 0:
        print(f"Error: {description} failed")
        print(result.stdout)
        print(result.stderr)
        sys.exit(1)
    return result


def platform_tag() -> str:
    system = platform.system().lower()
    arch = platform.machine().lower()
    if arch in ("x86_64", "amd64"):
        arch = "x64"
    elif arch in ("aarch64", "arm64"):
        arch = "arm64"
    return f"{system}-{arch}"


def install_dependencies():
    run_command([sys.executable, "-m", "pip", "install", "pyinstaller", "pytest"],
                "Installing PyInstaller and pytest")
    run_command([sys.executable, "-m", "pip", "install", "-r", "requirements.txt"],
                "Installing project dependencies")


def run_quick_tests():
    """Fast suite only; acceptance-scale runs are marked slow"""
    if os.environ.get("BSID_SKIP_TESTS"):
        print("Skipping tests (BSID_SKIP_TESTS set)")
        return
    run_command([sys.executable, "-m", "pytest", "-q", "-m", "not slow and not integration"],
                "Running quick test suite")


def build_executable() -> Path:
    cmd = [sys.executable, "-m", "PyInstaller", "--onefile", "--name", EXECUTABLE, "--console", "--clean"]
    for package in COLLECT:
        cmd += ["--collect-submodules", package]
    cmd.append(ENTRY_POINT)
    run_command(cmd, "Building executable with PyInstaller")

    suffix = ".exe" if platform.system() == "Windows" else ""
    built = Path("dist") / f"{EXECUTABLE}{suffix}"
    target = Path("dist") / f"{EXECUTABLE}-{platform_tag()}{suffix}"
    if not built.exists():
        print(f"Error: executable not found at {built}")
        sys.exit(1)
    if target.exists():
        target.unlink()
    built.rename(target)
    return target


def clean_build_files():
    shutil.rmtree("build", ignore_errors=True)
    for spec_file in Path(".").glob("*.spec"):
        spec_file.unlink()


def main():
    print("BlindSignedID CLI Build Script")
    print("=" * 50)
    if not Path(ENTRY_POINT).exists():
        print("Error: Must run from project root directory")
        sys.exit(1)

    try:
        install_dependencies()
        run_quick_tests()
        target = build_executable()
        clean_build_files()
        print("=" * 50)
        print(f"✅ Build completed: {target}")
    except KeyboardInterrupt:
        print("\nBuild interrupted by user")
        sys.exit(1)


if __name__ == "__main__":
    main()
