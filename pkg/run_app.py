#!/usr/bin/env python3
"""
Launcher for fairline
Run this script with CLI arguments to pass them to `fairline`, or without
arguments for an interactive menu.
"""

import subprocess
import sys

from app.core.config import API_HOST, API_PORT


def run_backend():
    """Start the FastAPI service"""
    print("Starting fairline HTTP service...")
    print(f"Server will be available at: http://localhost:{API_PORT}")
    print(f"API Documentation: http://localhost:{API_PORT}/docs")
    print("Press Ctrl+C to stop the server")
    print("-" * 50)

    try:
        subprocess.run([sys.executable, "-m", "uvicorn", "app.main:app", "--host", API_HOST, "--port", str(API_PORT)])
    except KeyboardInterrupt:
        print("\nService stopped")
    except Exception as e:
        print(f"Error starting service: {e}")


def run_demo():
    """Run a short optimization on the built-in highway scenario"""
    from app.cli import main as cli_main

    print("Running a 20-generation mock-LLM optimization on the default scenario...")
    print("-" * 50)
    return cli_main(["optimize", "--operator", "mock-llm", "--generations", "20"])


def check_dependencies():
    """Check if required packages are installed"""
    required_packages = ["numpy", "scipy", "pandas", "pymoo", "pydantic", "fastapi", "uvicorn", "requests"]
    missing_packages = []

    for package in required_packages:
        try:
            __import__(package)
        except ImportError:
            missing_packages.append(package)

    if missing_packages:
        print("Missing required packages:")
        for package in missing_packages:
            print(f"   - {package}")
        print("\nInstall missing packages with:")
        print("   pip install -r requirements.txt")
        return False

    return True


def main():
    """Main function"""
    if not check_dependencies():
        sys.exit(1)

    if len(sys.argv) > 1:
        from app.cli import main as cli_main

        sys.exit(cli_main(sys.argv[1:]))

    print("fairline")
    print("=" * 50)
    print("\nChoose an option:")
    print("1. Start HTTP service (FastAPI)")
    print("2. Run demo optimization")
    print("3. Exit")

    while True:
        try:
            choice = input("\nEnter your choice (1-3): ").strip()

            if choice == "1":
                run_backend()
                break
            elif choice == "2":
                sys.exit(run_demo())
            elif choice == "3":
                print("Goodbye!")
                sys.exit(0)
            else:
                print("Invalid choice. Please enter 1, 2, or 3.")
        except KeyboardInterrupt:
            print("\nGoodbye!")
            sys.exit(0)


if __name__ == "__main__":
    main()
