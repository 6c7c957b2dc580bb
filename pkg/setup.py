#!/usr/bin/env python3
"""
Setup script for the Non-Gaussianity Toolkit
This script installs dependencies, prepares the output directory and
initializes the results database.
"""

import os
import sys
import subprocess


def check_python_version():
    """Check if Python version is compatible"""
    if sys.version_info < (3, 9):
        print("Error: Python 3.9 or higher is required.")
        print(f"Current version: {sys.version}")
        return False
    print(f"✓ Python version: {sys.version}")
    return True


def install_requirements():
    """Install required packages"""
    print("\n📦 Installing required packages...")
    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", "requirements.txt"])
        print("✓ All packages installed successfully!")
        return True
    except subprocess.CalledProcessError as e:
        print(f"❌ Error installing packages: {e}")
        return False


def create_directories():
    """Create the default output directory"""
    from config import default_output_dir

    print("\n📁 Creating output directory...")
    directory = default_output_dir()
    os.makedirs(directory, exist_ok=True)
    print(f"✓ Output directory: {directory}")


def setup_database():
    """Initialize the results database"""
    print("\n🗄️ Setting up database...")
    try:
        from app import create_app
        from database import db
        app = create_app()
        with app.app_context():
            db.create_all()
            print(f"✓ Database initialized: {app.config['SQLALCHEMY_DATABASE_URI']}")
        return True
    except Exception as e:
        print(f"❌ Error setting up database: {e}")
        return False


def smoke_test():
    """Check the single-photon negativity against its closed form"""
    print("\n🔬 Running smoke test...")
    try:
        import math
        import cli
        result = cli.wln_summary("fock:1")
        expected = math.log2(4 * math.exp(-0.5) - 1)
        if abs(result["wln"] - expected) > 1e-4:
            print(f"❌ wln(fock:1) = {result['wln']:.6f}, expected {expected:.6f}")
            return False
        print(f"✓ wln(fock:1) = {result['wln']:.6f}")
        return True
    except Exception as e:
        print(f"❌ Smoke test failed: {e}")
        return False


def print_instructions():
    """Print setup completion instructions"""
    print("\n" + "="*60)
    print("🎉 SETUP COMPLETE!")
    print("="*60)
    print("\n📋 Next Steps:")
    print("1. Compute a single value:")
    print("   python cli.py wln --state fock:1")
    print("\n2. Reproduce a sweep:")
    print("   python cli.py sweep cubic --u 0.05:1.0:20")
    print("\n3. Start the results API:")
    print("   python app.py   (or ./run_app.sh)")
    print("\n4. Run the tests:")
    print("   pytest            (fast set)")
    print("   pytest -m slow    (full-size reproductions)")
    print("\n📖 For more information, see README.md and USER_MANUAL.md")
    print("="*60)


def main():
    """Main setup function"""
    print("🚀 Non-Gaussianity Toolkit - Setup Script")
    print("="*60)

    # Check Python version
    if not check_python_version():
        return False

    # Install requirements
    if not install_requirements():
        print("\n❌ Setup failed at package installation.")
        print("Please install packages manually: pip install -r requirements.txt")
        return False

    # Create directories
    create_directories()

    # Setup database
    if not setup_database():
        print("\n❌ Setup failed at database initialization.")
        return False

    if not smoke_test():
        print("\n⚠️ Warning: smoke test failed; check your numpy/scipy installation.")

    # Print instructions
    print_instructions()
    return True


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
